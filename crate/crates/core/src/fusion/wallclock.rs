use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::pipeline::{check_duration, finish, force_frame, fusion_adc, lattice, PipelineOutput, SensorSetup};
use super::{DropOldestQueue, FusionConfig, FusionError, ImageFrame, Scenario};

struct Shared {
    queue: DropOldestQueue<(usize, u64)>,
    closed: bool,
}

fn sleep_until(start: Instant, t_ns: u64) {
    let target = start + Duration::from_nanos(t_ns);
    let now = Instant::now();
    if target > now {
        thread::sleep(target - now);
    }
}

fn now_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

/// Same contract as `run_pipeline` but on real threads and the real clock:
/// one force producer, one image producer and one image worker. Timestamps
/// are measured, so runs are not bit-reproducible.
pub fn run_wall_clock(
    cfg: &FusionConfig,
    setup: &SensorSetup,
    scenario: &Scenario,
    duration_s: f64,
) -> Result<PipelineOutput, FusionError> {
    cfg.validate()?;
    scenario.validate()?;
    check_duration(duration_s)?;
    let shared = Mutex::new(Shared { queue: DropOldestQueue::new(cfg.queue_depth), closed: false });
    let ready = Condvar::new();
    let cost = Duration::from_secs_f64(cfg.image_cost_s);
    let start = Instant::now();

    let (force, images, captured) = thread::scope(|sc| -> Result<_, FusionError> {
        let force_job = sc.spawn(|| -> Result<Vec<_>, FusionError> {
            let mut out = Vec::new();
            if !cfg.mode.force_enabled() {
                return Ok(out);
            }
            let mut adc = fusion_adc(cfg, setup)?;
            let mut last = None;
            for t in lattice(cfg.force_rate, duration_s) {
                sleep_until(start, t);
                let mut ts = now_ns(start);
                if let Some(prev) = last {
                    ts = ts.max(prev + 1);
                }
                last = Some(ts);
                out.push(force_frame(setup, scenario, &mut adc, ts)?);
            }
            Ok(out)
        });

        let capture_job = sc.spawn(|| {
            let mut n = 0;
            if cfg.mode.texture_enabled() {
                let mut last = None;
                for (j, t) in lattice(cfg.image_rate, duration_s).into_iter().enumerate() {
                    sleep_until(start, t);
                    let mut ts = now_ns(start);
                    if let Some(prev) = last {
                        ts = ts.max(prev + 1);
                    }
                    last = Some(ts);
                    shared.lock().unwrap().queue.push((j, ts));
                    ready.notify_one();
                    n += 1;
                }
            }
            shared.lock().unwrap().closed = true;
            ready.notify_all();
            n
        });

        let worker_job = sc.spawn(|| -> Result<Vec<ImageFrame>, FusionError> {
            let mut out = Vec::new();
            loop {
                let next = {
                    let mut g = shared.lock().unwrap();
                    loop {
                        if let Some(item) = g.queue.pop() {
                            break Some(item);
                        }
                        if g.closed {
                            break None;
                        }
                        g = ready.wait(g).unwrap();
                    }
                };
                let Some((j, t)) = next else { break };
                let began = Instant::now();
                let (image, label, truth) = setup.render(scenario, t, j, cfg.seed)?;
                if let Some(rest) = cost.checked_sub(began.elapsed()) {
                    thread::sleep(rest);
                }
                out.push(ImageFrame { timestamp_ns: t, index: j, image, label, truth, completed_ns: now_ns(start) });
            }
            Ok(out)
        });

        let force = force_job.join().expect("force thread panicked")?;
        let captured = capture_job.join().expect("capture thread panicked");
        let images = worker_job.join().expect("image worker panicked")?;
        Ok((force, images, captured))
    })?;
    let drops = shared.into_inner().unwrap().queue.dropped();
    finish(cfg, duration_s, force, images, captured, drops)
}
