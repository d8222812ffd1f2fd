use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::FusionError;
use crate::physics::Wrench;
use crate::tactile::{Grid, Pose, ShapeClass};

/// An object pressed into the gel during a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub shape: ShapeClass,
    pub pose: Pose,
    pub depth: f64,
}

/// A span of the timeline with a linear wrench ramp and an optional contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_ns: u64,
    pub end_ns: u64,
    pub wrench_from: Wrench<f64>,
    pub wrench_to: Wrench<f64>,
    pub contact: Option<Contact>,
}

impl Segment {
    pub fn wrench_at(&self, t_ns: u64) -> Wrench<f64> {
        let span = (self.end_ns - self.start_ns) as f64;
        let a = ((t_ns - self.start_ns) as f64 / span).clamp(0.0, 1.0);
        self.wrench_from * (1.0 - a) + self.wrench_to * a
    }
}

/// Scripted load and contact timeline. Outside every segment the sensor
/// is unloaded and untouched.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub segments: Vec<Segment>,
}

impl Scenario {
    pub fn new(segments: Vec<Segment>) -> Result<Self, FusionError> {
        let s = Self { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.end_ns <= seg.start_ns {
                return Err(FusionError::Scenario(format!("segment {i} ends before it starts")));
            }
            if i > 0 && seg.start_ns < self.segments[i - 1].end_ns {
                return Err(FusionError::Scenario(format!("segment {i} overlaps its predecessor")));
            }
            if !(seg.wrench_from.is_finite() && seg.wrench_to.is_finite()) {
                return Err(FusionError::Scenario(format!("segment {i} has a non-finite wrench")));
            }
        }
        Ok(())
    }

    fn segment_at(&self, t_ns: u64) -> Option<&Segment> {
        let i = self.segments.partition_point(|s| s.end_ns <= t_ns);
        self.segments.get(i).filter(|s| s.start_ns <= t_ns)
    }

    pub fn wrench_at(&self, t_ns: u64) -> Wrench<f64> {
        self.segment_at(t_ns).map(|s| s.wrench_at(t_ns)).unwrap_or_else(Wrench::zero)
    }

    pub fn contact_at(&self, t_ns: u64) -> Option<Contact> {
        self.segment_at(t_ns).and_then(|s| s.contact)
    }

    /// Back-to-back 100 ms presses cycling through every shape, each with
    /// a compressive ramp and a small tilt.
    pub fn demo(duration_s: f64, grid: Grid) -> Self {
        let seg_ns = 100_000_000u64;
        let total = (duration_s * 1e9).round().max(0.0) as u64;
        let scale = 0.25 * grid.width.min(grid.height) as f64;
        let mut segments = Vec::new();
        let mut k = 0u64;
        while k * seg_ns < total {
            let shape = ShapeClass::ALL[(k % 10) as usize];
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            segments.push(Segment {
                start_ns: k * seg_ns,
                end_ns: ((k + 1) * seg_ns).min(total),
                wrench_from: Wrench::new(0.5, 0.0, 0.0),
                wrench_to: Wrench::new(1.0 + (k % 5) as f64, 0.02 * sign, -0.015 * sign),
                contact: Some(Contact {
                    shape,
                    pose: Pose::new(
                        grid.width as f64 / 2.0,
                        grid.height as f64 / 2.0,
                        0.7 * k as f64,
                        scale,
                    ),
                    depth: 3e-4,
                }),
            });
            k += 1;
        }
        Self { segments }
    }
}

/// CSV row form. An empty or `none` shape means no contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SegmentRecord {
    start_s: f64,
    end_s: f64,
    fz0: f64,
    mx0: f64,
    my0: f64,
    fz1: f64,
    mx1: f64,
    my1: f64,
    shape: String,
    cx: Option<f64>,
    cy: Option<f64>,
    rotation: Option<f64>,
    scale: Option<f64>,
    depth: Option<f64>,
}

pub const SCENARIO_HEADER: &str = "start_s,end_s,fz0,mx0,my0,fz1,mx1,my1,shape,cx,cy,rotation,scale,depth";

fn to_ns(s: f64, line: usize) -> Result<u64, FusionError> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(FusionError::Scenario(format!("line {line}: bad time {s}")));
    }
    Ok((s * 1e9).round() as u64)
}

pub fn read_scenario<R: Read>(r: R) -> Result<Scenario, FusionError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut segments = Vec::new();
    for (i, rec) in rd.deserialize::<SegmentRecord>().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| FusionError::Scenario(format!("line {line}: {e}")))?;
        let shape = rec.shape.trim();
        let contact = if shape.is_empty() || shape.eq_ignore_ascii_case("none") {
            None
        } else {
            let shape: ShapeClass = shape.parse().map_err(|e| FusionError::Scenario(format!("line {line}: {e}")))?;
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| FusionError::Scenario(format!("line {line}: contact needs `{name}`")))
            };
            Some(Contact {
                shape,
                pose: Pose::new(
                    need(rec.cx, "cx")?,
                    need(rec.cy, "cy")?,
                    rec.rotation.unwrap_or(0.0),
                    need(rec.scale, "scale")?,
                ),
                depth: need(rec.depth, "depth")?,
            })
        };
        segments.push(Segment {
            start_ns: to_ns(rec.start_s, line)?,
            end_ns: to_ns(rec.end_s, line)?,
            wrench_from: Wrench::new(rec.fz0, rec.mx0, rec.my0),
            wrench_to: Wrench::new(rec.fz1, rec.mx1, rec.my1),
            contact,
        });
    }
    Scenario::new(segments)
}

pub fn write_scenario<W: Write>(w: W, s: &Scenario) -> Result<(), FusionError> {
    let mut wr = csv::Writer::from_writer(w);
    for seg in &s.segments {
        let c = seg.contact;
        wr.serialize(SegmentRecord {
            start_s: seg.start_ns as f64 / 1e9,
            end_s: seg.end_ns as f64 / 1e9,
            fz0: seg.wrench_from.fz,
            mx0: seg.wrench_from.mx,
            my0: seg.wrench_from.my,
            fz1: seg.wrench_to.fz,
            mx1: seg.wrench_to.mx,
            my1: seg.wrench_to.my,
            shape: c.map(|c| c.shape.name().to_string()).unwrap_or_else(|| "none".into()),
            cx: c.map(|c| c.pose.center_x),
            cy: c.map(|c| c.pose.center_y),
            rotation: c.map(|c| c.pose.rotation),
            scale: c.map(|c| c.pose.scale),
            depth: c.map(|c| c.depth),
        })
        .map_err(|e| FusionError::Scenario(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_and_gaps() {
        let s = Scenario::new(vec![Segment {
            start_ns: 100,
            end_ns: 200,
            wrench_from: Wrench::new(0.0, 0.0, 0.0),
            wrench_to: Wrench::new(2.0, 0.02, -0.04),
            contact: None,
        }])
        .unwrap();
        assert_eq!(s.wrench_at(50), Wrench::zero());
        assert_eq!(s.wrench_at(150), Wrench::new(1.0, 0.01, -0.02));
        assert_eq!(s.wrench_at(200), Wrench::zero());
        assert!(s.contact_at(150).is_none());
    }

    #[test]
    fn rejects_overlap_and_empty_span() {
        let seg = |a, b| Segment {
            start_ns: a,
            end_ns: b,
            wrench_from: Wrench::zero(),
            wrench_to: Wrench::zero(),
            contact: None,
        };
        assert!(Scenario::new(vec![seg(0, 10), seg(5, 20)]).is_err());
        assert!(Scenario::new(vec![seg(10, 10)]).is_err());
        assert!(Scenario::new(vec![seg(0, 10), seg(10, 20)]).is_ok());
    }

    #[test]
    fn demo_covers_duration_and_fits_frame() {
        let grid = Grid::default();
        let s = Scenario::demo(1.0, grid);
        assert_eq!(s.segments.len(), 10);
        assert_eq!(s.segments.last().unwrap().end_ns, 1_000_000_000);
        let c = s.contact_at(550_000_000).unwrap();
        assert_eq!(c.shape, ShapeClass::Diamond);
        assert!(c.pose.scale + 6.0 <= grid.height as f64 / 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let s = Scenario::demo(0.3, Grid::default());
        let mut buf = Vec::new();
        write_scenario(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(SCENARIO_HEADER));
        assert_eq!(read_scenario(&buf[..]).unwrap(), s);
        let plain = format!("{SCENARIO_HEADER}\n0,0.5,1,0,0,2,0,0,none,,,,,\n");
        let p = read_scenario(plain.as_bytes()).unwrap();
        assert!(p.segments[0].contact.is_none());
        let bad = format!("{SCENARIO_HEADER}\n0,0.5,1,0,0,2,0,0,blob,1,1,0,1,1\n");
        assert!(read_scenario(bad.as_bytes()).is_err());
        let missing = format!("{SCENARIO_HEADER}\n0,0.5,1,0,0,2,0,0,circle,,,,,\n");
        assert!(read_scenario(missing.as_bytes()).is_err());
    }
}
