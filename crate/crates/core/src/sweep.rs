//! Shoe-mass × spring-preload grids: full-engagement speed surfaces and
//! labelled engagement datasets.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clutch::ClutchParams;
use crate::driveline::{Configuration, DrivelineParams};
use crate::error::{Error, Result};
use crate::sim::{Engagement, Scenario, SimConfig, Simulator};

/// `count` evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidParams(format!(
                "{name} range needs min < max, got {} and {}",
                self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidParams(format!(
                "{name} range needs count >= 2, got {}",
                self.count
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub mass: AxisRange,
    pub preload: AxisRange,
    pub configuration: Configuration,
    /// Engagement above this input speed counts as a failure to engage.
    pub operating_speed_max: f64,
    /// Extra uniformly drawn (mass, preload) points for datasets.
    pub jitter_samples: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.mass.validate("shoe mass")?;
        self.preload.validate("preload")?;
        if !(self.operating_speed_max > 0.0) {
            return Err(Error::InvalidParams(format!(
                "operating_speed_max must be > 0, got {}",
                self.operating_speed_max
            )));
        }
        Ok(())
    }

    /// Grid nodes in row-major order: mass outer, preload inner.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let preloads = self.preload.values();
        self.mass
            .values()
            .into_iter()
            .flat_map(|m| preloads.iter().map(move |&f| (m, f)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub shoe_mass: f64,
    pub preload: f64,
    pub engagement: Engagement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngagementSample {
    pub shoe_mass: f64,
    pub preload: f64,
    pub engaged: bool,
    pub full_engagement_speed: Option<f64>,
}

impl EngagementSample {
    pub fn label(full_engagement_speed: Option<f64>, operating_speed_max: f64) -> bool {
        full_engagement_speed.is_some_and(|w| w <= operating_speed_max)
    }
}

pub const SURFACE_HEADER: &str = "shoe_mass,preload,full_engagement_speed,engaged";

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementDataset {
    pub samples: Vec<EngagementSample>,
}

impl EngagementDataset {
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| vec![s.shoe_mass, s.preload])
            .collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.engaged).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_rows(out, self.samples.iter().copied())
    }

    pub fn read_csv<R: BufRead>(input: R, origin: &str) -> Result<Self> {
        let fail = |line: usize, message: String| Error::Format {
            path: origin.to_string(),
            message: format!("line {line}: {message}"),
        };
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == SURFACE_HEADER => {}
            Some((_, Ok(h))) => return Err(fail(1, format!("unexpected header {h:?}"))),
            Some((_, Err(e))) => return Err(Error::io(origin, e)),
            None => return Err(fail(1, "empty file".into())),
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(fail(i + 1, format!("expected 4 columns, got {}", cols.len())));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| fail(i + 1, format!("{s:?}: {e}")))
            };
            let speed = if cols[2].trim().is_empty() {
                None
            } else {
                Some(num(cols[2])?)
            };
            let engaged = match cols[3].trim() {
                "1" => true,
                "0" => false,
                other => return Err(fail(i + 1, format!("engaged must be 0 or 1, got {other:?}"))),
            };
            samples.push(EngagementSample {
                shoe_mass: num(cols[0])?,
                preload: num(cols[1])?,
                engaged,
                full_engagement_speed: speed,
            });
        }
        Ok(Self { samples })
    }
}

fn write_rows<W: Write>(
    mut out: W,
    rows: impl Iterator<Item = EngagementSample>,
) -> std::io::Result<()> {
    writeln!(out, "{SURFACE_HEADER}")?;
    for s in rows {
        let speed = s.full_engagement_speed.map(|w| w.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{}",
            s.shoe_mass,
            s.preload,
            speed,
            u8::from(s.engaged)
        )?;
    }
    Ok(())
}

/// Writes a surface in the dataset schema, labelling against `operating_speed_max`.
pub fn write_surface_csv<W: Write>(
    out: W,
    surface: &[SurfacePoint],
    operating_speed_max: f64,
) -> std::io::Result<()> {
    write_rows(
        out,
        surface.iter().map(|p| {
            let speed = p.engagement.speed();
            EngagementSample {
                shoe_mass: p.shoe_mass,
                preload: p.preload,
                engaged: EngagementSample::label(speed, operating_speed_max),
                full_engagement_speed: speed,
            }
        }),
    )
}

fn evaluate(
    points: &[(f64, f64)],
    base: &ClutchParams,
    drive: &DrivelineParams,
    scn: &Scenario,
    cfg: &SimConfig,
) -> Result<Vec<SurfacePoint>> {
    points
        .par_iter()
        .map(|&(shoe_mass, preload)| {
            let clutch = base.with_shoe_mass(shoe_mass).with_preload(preload);
            Simulator::new(&clutch, drive, scn, cfg)
                .and_then(|s| s.full_engagement_speed())
                .map(|engagement| SurfacePoint {
                    shoe_mass,
                    preload,
                    engagement,
                })
                .map_err(|e| Error::GridPoint {
                    shoe_mass,
                    preload,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Full-engagement speed at every grid node, mass-major order.
///
/// Nodes are evaluated in parallel; each run owns its state, so the result
/// matches a sequential evaluation exactly.
pub fn sweep_engagement_speed(
    grid: &GridSpec,
    base: &ClutchParams,
    drive: &DrivelineParams,
    scn: &Scenario,
    cfg: &SimConfig,
) -> Result<Vec<SurfacePoint>> {
    grid.validate()?;
    let drive = drive.with_configuration(grid.configuration);
    evaluate(&grid.nodes(), base, &drive, scn, cfg)
}

/// Labelled samples at every grid node followed by `grid.jitter_samples`
/// uniformly drawn points from a `ChaCha8` stream seeded with `seed`.
pub fn generate_dataset(
    grid: &GridSpec,
    base: &ClutchParams,
    drive: &DrivelineParams,
    scn: &Scenario,
    cfg: &SimConfig,
    seed: u64,
) -> Result<EngagementDataset> {
    grid.validate()?;
    let drive = drive.with_configuration(grid.configuration);
    let mut points = grid.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..grid.jitter_samples {
        let m = rng.gen_range(grid.mass.min..=grid.mass.max);
        let f = rng.gen_range(grid.preload.min..=grid.preload.max);
        points.push((m, f));
    }
    let surface = evaluate(&points, base, &drive, scn, cfg)?;
    Ok(EngagementDataset {
        samples: surface
            .into_iter()
            .map(|p| {
                let speed = p.engagement.speed();
                EngagementSample {
                    shoe_mass: p.shoe_mass,
                    preload: p.preload,
                    engaged: EngagementSample::label(speed, grid.operating_speed_max),
                    full_engagement_speed: speed,
                }
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_hit_endpoints() {
        let v = AxisRange::new(0.05, 0.5, 21).values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.05);
        assert_eq!(v[20], 0.5);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn nodes_are_mass_major() {
        let g = GridSpec {
            mass: AxisRange::new(1.0, 2.0, 2),
            preload: AxisRange::new(10.0, 30.0, 3),
            configuration: Configuration::A,
            operating_speed_max: 400.0,
            jitter_samples: 0,
        };
        assert_eq!(
            g.nodes(),
            vec![(1.0, 10.0), (1.0, 20.0), (1.0, 30.0), (2.0, 10.0), (2.0, 20.0), (2.0, 30.0)]
        );
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec {
            mass: AxisRange::new(0.1, 0.2, 2),
            preload: AxisRange::new(10.0, 30.0, 2),
            configuration: Configuration::A,
            operating_speed_max: 400.0,
            jitter_samples: 0,
        };
        assert!(g.validate().is_ok());
        g.mass.count = 1;
        assert!(g.validate().is_err());
        g.mass.count = 2;
        g.preload.max = 5.0;
        assert!(g.validate().is_err());
        g.preload.max = 30.0;
        g.operating_speed_max = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn label_rule() {
        assert!(EngagementSample::label(Some(399.0), 400.0));
        assert!(EngagementSample::label(Some(400.0), 400.0));
        assert!(!EngagementSample::label(Some(400.1), 400.0));
        assert!(!EngagementSample::label(None, 400.0));
    }

    #[test]
    fn csv_round_trip_keeps_missing_speeds() {
        let ds = EngagementDataset {
            samples: vec![
                EngagementSample {
                    shoe_mass: 0.1,
                    preload: 20.0,
                    engaged: true,
                    full_engagement_speed: Some(321.5),
                },
                EngagementSample {
                    shoe_mass: 0.05,
                    preload: 300.0,
                    engaged: false,
                    full_engagement_speed: None,
                },
            ],
        };
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("0.05,300,,0"), "{text}");
        let back = EngagementDataset::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_reader_rejects_garbage() {
        assert!(EngagementDataset::read_csv(&b"a,b\n"[..], "mem").is_err());
        let bad = format!("{SURFACE_HEADER}\n0.1,20,,2\n");
        assert!(EngagementDataset::read_csv(bad.as_bytes(), "mem").is_err());
    }
}
