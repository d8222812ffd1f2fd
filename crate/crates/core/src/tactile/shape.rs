use std::fmt;
use std::str::FromStr;

/// The ten contact shapes of the classification set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeClass {
    Circle,
    ConcentricCircle,
    Pentagon,
    SemiCircle,
    Square,
    Diamond,
    Heart,
    Moon,
    Trapezium,
    Triangle,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 10] = [
        ShapeClass::Circle,
        ShapeClass::ConcentricCircle,
        ShapeClass::Pentagon,
        ShapeClass::SemiCircle,
        ShapeClass::Square,
        ShapeClass::Diamond,
        ShapeClass::Heart,
        ShapeClass::Moon,
        ShapeClass::Trapezium,
        ShapeClass::Triangle,
    ];

    pub const COUNT: usize = 10;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Circle => "circle",
            ShapeClass::ConcentricCircle => "concentric-circle",
            ShapeClass::Pentagon => "pentagon",
            ShapeClass::SemiCircle => "semi-circle",
            ShapeClass::Square => "square",
            ShapeClass::Diamond => "diamond",
            ShapeClass::Heart => "heart",
            ShapeClass::Moon => "moon",
            ShapeClass::Trapezium => "trapezium",
            ShapeClass::Triangle => "triangle",
        }
    }

    /// Membership test in the shape's unit frame. Every shape lies inside
    /// the unit disc, so a pose scale is the radius of the bounding circle.
    pub fn contains(self, u: f64, v: f64) -> bool {
        let r = u.hypot(v);
        match self {
            ShapeClass::Circle => r <= 1.0,
            ShapeClass::ConcentricCircle => (0.5..=1.0).contains(&r),
            ShapeClass::Pentagon => in_regular_polygon(u, v, 5),
            // Radius 0.92 half-disc with its flat edge below the origin so
            // the centroid sits near the frame centre.
            ShapeClass::SemiCircle => {
                let y = v + 0.39;
                y >= 0.0 && u.hypot(y) <= 0.92
            }
            ShapeClass::Square => u.abs() <= std::f64::consts::FRAC_1_SQRT_2 && v.abs() <= std::f64::consts::FRAC_1_SQRT_2,
            // Rhombus, half-diagonals 0.6 and 1.
            ShapeClass::Diamond => u.abs() / 0.6 + v.abs() <= 1.0,
            ShapeClass::Heart => {
                let x = u * 1.45;
                let y = -v * 1.45 + 0.1;
                let a = x * x + y * y - 1.0;
                a * a * a - x * x * y * y * y <= 0.0
            }
            ShapeClass::Moon => r <= 1.0 && (u - 0.45).hypot(v) > 0.75,
            // Isosceles, 0.8 half-width at the base, 0.45 at the top.
            ShapeClass::Trapezium => v.abs() <= 0.55 && u.abs() <= 0.625 - 0.318_181_818 * v,
            ShapeClass::Triangle => in_regular_polygon(u, v, 3),
        }
    }
}

/// Regular n-gon with circumradius 1 and a vertex on +v.
fn in_regular_polygon(u: f64, v: f64, n: usize) -> bool {
    let step = std::f64::consts::TAU / n as f64;
    let apothem = (step / 2.0).cos();
    (0..n).all(|k| {
        // Outward normal of edge k sits halfway between vertices k and k+1.
        let a = std::f64::consts::FRAC_PI_2 + step * (k as f64 + 0.5);
        u * a.cos() + v * a.sin() <= apothem
    })
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown shape `{0}`")]
pub struct UnknownShape(pub String);

impl FromStr for ShapeClass {
    type Err = UnknownShape;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        let norm = match norm.as_str() {
            "concentric" | "concentriccircle" | "ring" => "concentric-circle".to_string(),
            "semicircle" => "semi-circle".to_string(),
            "trapezoid" => "trapezium".to_string(),
            _ => norm,
        };
        Self::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| UnknownShape(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in ShapeClass::ALL {
            assert_eq!(c.name().parse::<ShapeClass>().unwrap(), c);
            assert_eq!(ShapeClass::from_index(c.index()), Some(c));
        }
        assert_eq!("Concentric Circle".parse::<ShapeClass>().unwrap(), ShapeClass::ConcentricCircle);
        assert!("hexagon".parse::<ShapeClass>().is_err());
        assert_eq!(ShapeClass::ALL.len(), ShapeClass::COUNT);
    }

    #[test]
    fn shapes_fit_in_unit_disc_and_are_nonempty() {
        let n = 401;
        for c in ShapeClass::ALL {
            let mut inside = 0;
            for i in 0..n {
                for j in 0..n {
                    let u = -1.2 + 2.4 * i as f64 / (n - 1) as f64;
                    let v = -1.2 + 2.4 * j as f64 / (n - 1) as f64;
                    if c.contains(u, v) {
                        inside += 1;
                        assert!(u.hypot(v) <= 1.0 + 1e-9, "{c} leaks at ({u}, {v})");
                    }
                }
            }
            assert!(inside > 5000, "{c} too small: {inside}");
        }
    }

    #[test]
    fn ring_has_empty_centre() {
        assert!(!ShapeClass::ConcentricCircle.contains(0.0, 0.0));
        assert!(ShapeClass::ConcentricCircle.contains(0.75, 0.0));
        assert!(ShapeClass::Circle.contains(0.0, 0.0));
    }

    #[test]
    fn polygon_vertices() {
        assert!(in_regular_polygon(0.0, 0.999, 5));
        assert!(!in_regular_polygon(0.0, 1.001, 5));
        assert!(!in_regular_polygon(0.0, -0.9, 3), "triangle apothem is 0.5");
        assert!(in_regular_polygon(0.0, -0.49, 3));
    }
}
