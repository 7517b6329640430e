//! Potentials, forces and periodic geometry for gradient systems `dX = a(X) dt + sigma dW`
//! with drift `a = -grad V`.

use std::f64::consts::TAU;

use thiserror::Error;

/// Pair distances below this are treated as a collision for Lennard-Jones.
pub const LJ_SINGULAR_DISTANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("potential {potential} is not defined on domain {domain}")]
    IncompatibleDomain { potential: String, domain: String },
    #[error("minimum image requires a periodic box")]
    NotABox,
    #[error("singular configuration: particles {i} and {j} at distance {distance:e}")]
    SingularConfiguration { i: usize, j: usize, distance: f64 },
}

/// Geometry of the configuration space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Unbounded { dim: usize },
    PeriodicInterval { length: f64 },
    /// `particles` points in a cubic box of side `box_length`, stored as `[x0, y0, z0, x1, ...]`.
    PeriodicBox { particles: usize, box_length: f64 },
}

impl Domain {
    pub fn unbounded(dim: usize) -> Result<Self, ModelError> {
        let d = Domain::Unbounded { dim };
        d.validate()?;
        Ok(d)
    }

    pub fn periodic_interval(length: f64) -> Result<Self, ModelError> {
        let d = Domain::PeriodicInterval { length };
        d.validate()?;
        Ok(d)
    }

    /// The circle `[0, 2 pi)`.
    pub fn circle() -> Self {
        Domain::PeriodicInterval { length: TAU }
    }

    pub fn periodic_box(particles: usize, box_length: f64) -> Result<Self, ModelError> {
        let d = Domain::PeriodicBox {
            particles,
            box_length,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Domain::Unbounded { dim } if dim == 0 => {
                Err(ModelError::InvalidDomain("dimension must be positive".into()))
            }
            Domain::PeriodicInterval { length } if !(length > 0.0 && length.is_finite()) => Err(
                ModelError::InvalidDomain(format!("interval length must be positive, got {length}")),
            ),
            Domain::PeriodicBox {
                particles,
                box_length,
            } if particles == 0 || !(box_length > 0.0 && box_length.is_finite()) => {
                Err(ModelError::InvalidDomain(format!(
                    "box needs particles > 0 and positive length, got {particles} / {box_length}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Domain::Unbounded { dim } => dim,
            Domain::PeriodicInterval { .. } => 1,
            Domain::PeriodicBox { particles, .. } => 3 * particles,
        }
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self, Domain::Unbounded { .. })
    }

    /// Period of every coordinate, or `None` for unbounded domains.
    pub fn period(&self) -> Option<f64> {
        match *self {
            Domain::Unbounded { .. } => None,
            Domain::PeriodicInterval { length } => Some(length),
            Domain::PeriodicBox { box_length, .. } => Some(box_length),
        }
    }

    pub fn check_len(&self, len: usize) -> Result<(), ModelError> {
        if len == self.dim() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            })
        }
    }

    /// Maps every periodic coordinate into `[0, L)` in place.
    pub fn wrap_in_place(&self, x: &mut [f64]) {
        if let Some(l) = self.period() {
            for v in x.iter_mut() {
                *v = wrap_coordinate(*v, l);
            }
        }
    }

    pub fn wrap(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_len(x.len())?;
        let mut out = x.to_vec();
        self.wrap_in_place(&mut out);
        Ok(out)
    }

    /// Shortest periodic image of a displacement, each component in `[-L/2, L/2)`.
    pub fn minimum_image(&self, dx: [f64; 3]) -> Result<[f64; 3], ModelError> {
        match *self {
            Domain::PeriodicBox { box_length, .. } => Ok(dx.map(|d| min_image(d, box_length))),
            _ => Err(ModelError::NotABox),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Domain::Unbounded { dim } => format!("unbounded(dim={dim})"),
            Domain::PeriodicInterval { length } => format!("periodic-interval(L={length})"),
            Domain::PeriodicBox {
                particles,
                box_length,
            } => format!("periodic-box(n={particles}, L={box_length})"),
        }
    }
}

#[inline]
pub(crate) fn wrap_coordinate(v: f64, l: f64) -> f64 {
    let r = v.rem_euclid(l);
    // rem_euclid can round up to exactly l for tiny negative inputs
    if r >= l {
        r - l
    } else {
        r
    }
}

#[inline]
pub(crate) fn min_image(d: f64, l: f64) -> f64 {
    let r = d - l * (d / l + 0.5).floor();
    if r >= 0.5 * l {
        r - l
    } else if r < -0.5 * l {
        r + l
    } else {
        r
    }
}

/// A point of configuration space bound to its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    position: Vec<f64>,
    domain: Domain,
}

impl Configuration {
    /// Validates the length and wraps periodic coordinates into the fundamental cell.
    pub fn new(domain: Domain, mut position: Vec<f64>) -> Result<Self, ModelError> {
        domain.validate()?;
        domain.check_len(position.len())?;
        domain.wrap_in_place(&mut position);
        Ok(Configuration { position, domain })
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn position_mut(&mut self) -> &mut [f64] {
        &mut self.position
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn into_position(self) -> Vec<f64> {
        self.position
    }

    /// Simple cubic lattice with `n` points per side, offset by half a lattice spacing.
    pub fn cubic_lattice(n_per_side: usize, box_length: f64) -> Result<Self, ModelError> {
        let particles = n_per_side.pow(3);
        let domain = Domain::periodic_box(particles, box_length)?;
        let a = box_length / n_per_side as f64;
        let mut pos = Vec::with_capacity(3 * particles);
        for i in 0..n_per_side {
            for j in 0..n_per_side {
                for k in 0..n_per_side {
                    pos.extend_from_slice(&[
                        (i as f64 + 0.5) * a,
                        (j as f64 + 0.5) * a,
                        (k as f64 + 0.5) * a,
                    ]);
                }
            }
        }
        Configuration::new(domain, pos)
    }
}

/// The energy landscapes supported by the integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSpec {
    /// `V(x) = alpha |x|^2 / 2`, so `a(x) = -alpha x`.
    Quadratic { alpha: f64 },
    /// `V(x) = cos(x)` on the circle `[0, 2 pi)`.
    Cosine,
    /// Sum of `r^-12 - r^-6` over unordered pairs, minimum-image distances, no cutoff.
    LennardJonesBox { particles: usize, box_length: f64 },
    /// `V = 0` on any domain (pure diffusion).
    Flat,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            PotentialSpec::Quadratic { alpha } if !(alpha > 0.0 && alpha.is_finite()) => Err(
                ModelError::InvalidPotential(format!("alpha must be positive, got {alpha}")),
            ),
            PotentialSpec::LennardJonesBox {
                particles,
                box_length,
            } if particles < 2 || !(box_length > 0.0 && box_length.is_finite()) => {
                Err(ModelError::InvalidPotential(format!(
                    "Lennard-Jones box needs >= 2 particles and positive length, got {particles} / {box_length}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The domain this potential lives on, for potentials that fix one.
    pub fn natural_domain(&self) -> Option<Domain> {
        match *self {
            PotentialSpec::Quadratic { .. } | PotentialSpec::Flat => None,
            PotentialSpec::Cosine => Some(Domain::circle()),
            PotentialSpec::LennardJonesBox {
                particles,
                box_length,
            } => Some(Domain::PeriodicBox {
                particles,
                box_length,
            }),
        }
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<(), ModelError> {
        self.validate()?;
        domain.validate()?;
        let ok = match (*self, *domain) {
            (PotentialSpec::Flat, _) => true,
            (PotentialSpec::Quadratic { .. }, Domain::Unbounded { .. }) => true,
            (PotentialSpec::Cosine, Domain::PeriodicInterval { length }) => {
                (length - TAU).abs() <= 1e-12 * TAU
            }
            (
                PotentialSpec::LennardJonesBox {
                    particles,
                    box_length,
                },
                Domain::PeriodicBox {
                    particles: p,
                    box_length: l,
                },
            ) => particles == p && box_length == l,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::IncompatibleDomain {
                potential: format!("{self:?}"),
                domain: domain.describe(),
            })
        }
    }

    pub fn energy(&self, x: &Configuration) -> Result<f64, ModelError> {
        self.check_domain(&x.domain)?;
        self.energy_raw(x.position())
    }

    pub fn force(&self, x: &Configuration) -> Result<Vec<f64>, ModelError> {
        self.check_domain(&x.domain)?;
        let mut out = vec![0.0; x.dim()];
        self.force_into(x.position(), &mut out)?;
        Ok(out)
    }

    /// `V(x)` without domain checks; `x` may hold unwrapped periodic coordinates.
    pub fn energy_raw(&self, x: &[f64]) -> Result<f64, ModelError> {
        match *self {
            PotentialSpec::Quadratic { alpha } => {
                Ok(0.5 * alpha * x.iter().map(|v| v * v).sum::<f64>())
            }
            PotentialSpec::Cosine => Ok(x.iter().map(|v| v.cos()).sum()),
            PotentialSpec::Flat => Ok(0.0),
            PotentialSpec::LennardJonesBox {
                particles,
                box_length,
            } => {
                check_raw_len(3 * particles, x.len())?;
                let mut e = 0.0;
                for_each_pair(x, particles, box_length, |_, _, _, r2| {
                    let inv6 = (r2 * r2 * r2).recip();
                    e += inv6 * inv6 - inv6;
                })?;
                Ok(e)
            }
        }
    }

    /// Writes `a(x) = -grad V(x)` into `out`, without domain checks.
    pub fn force_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_raw_len(x.len(), out.len())?;
        match *self {
            PotentialSpec::Quadratic { alpha } => {
                for (f, v) in out.iter_mut().zip(x) {
                    *f = -alpha * v;
                }
            }
            PotentialSpec::Cosine => {
                for (f, v) in out.iter_mut().zip(x) {
                    *f = v.sin();
                }
            }
            PotentialSpec::Flat => out.fill(0.0),
            PotentialSpec::LennardJonesBox {
                particles,
                box_length,
            } => {
                check_raw_len(3 * particles, x.len())?;
                out.fill(0.0);
                for_each_pair(x, particles, box_length, |i, j, d, r2| {
                    let inv2 = r2.recip();
                    let inv6 = inv2 * inv2 * inv2;
                    // force on i is (-12 r^-14 + 6 r^-8) (x_j - x_i)
                    let s = (6.0 * inv6 - 12.0 * inv6 * inv6) * inv2;
                    for c in 0..3 {
                        let f = s * d[c];
                        out[3 * i + c] += f;
                        out[3 * j + c] -= f;
                    }
                })?;
            }
        }
        Ok(())
    }
}

fn check_raw_len(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { expected, got })
    }
}

/// Visits every unordered pair with its minimum-image displacement `x_j - x_i` and squared length.
#[inline]
fn for_each_pair<F>(x: &[f64], particles: usize, l: f64, mut visit: F) -> Result<(), ModelError>
where
    F: FnMut(usize, usize, [f64; 3], f64),
{
    let min_r2 = LJ_SINGULAR_DISTANCE * LJ_SINGULAR_DISTANCE;
    for i in 0..particles {
        let xi = [x[3 * i], x[3 * i + 1], x[3 * i + 2]];
        for j in (i + 1)..particles {
            let d = [
                min_image(x[3 * j] - xi[0], l),
                min_image(x[3 * j + 1] - xi[1], l),
                min_image(x[3 * j + 2] - xi[2], l),
            ];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if !(r2 >= min_r2) {
                return Err(ModelError::SingularConfiguration {
                    i,
                    j,
                    distance: r2.sqrt(),
                });
            }
            visit(i, j, d, r2);
        }
    }
    Ok(())
}
