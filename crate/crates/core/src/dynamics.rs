//! Benchmark ODE systems, a fixed-step RK4 integrator, and flow-map data.
//!
//! All three systems are autonomous. Integration is classical fourth-order
//! Runge-Kutta with an optional number of equal substeps per reported step;
//! no adaptive control. States whose magnitude exceeds
//! [`DIVERGENCE_LIMIT`] (or that stop being finite) abort the computation
//! with a divergence error instead of emitting garbage rows.

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// States with any component beyond this magnitude are treated as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// One of the built-in ODE systems, with its parameter values.
///
/// The equations are written exactly in the form used by the experiments this
/// crate reproduces; the Lorenz variant below is an equivalent relabelling of
/// the textbook system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum System<T> {
    /// `x1' = a1 x1 + x2 x3`, `x2' = a2 (x2 - x3)`, `x3' = -x1 x2 + a3 x2 - x3`.
    Lorenz { a1: T, a2: T, a3: T },
    /// `x1' = x2`, `x2' = a (1 - x1^2) x2 - x1`.
    VanDerPol { a: T },
    /// `x1' = x2 - a1 x1^3 + a2 x1^2 - x3 + i`,
    /// `x2' = a3 - a4 x1^2 - x2`,
    /// `x3' = epsilon (a5 (x1 - x_rest) - x3)`.
    HindmarshRose {
        a1: T,
        a2: T,
        a3: T,
        a4: T,
        a5: T,
        epsilon: T,
        i: T,
        x_rest: T,
    },
}

impl<T: Scalar> System<T> {
    /// Lorenz with the classic chaotic parameters `a1 = -8/3, a2 = -10, a3 = 28`.
    pub fn lorenz_classic() -> Self {
        System::Lorenz {
            a1: T::lit(-8.0 / 3.0),
            a2: T::lit(-10.0),
            a3: T::lit(28.0),
        }
    }

    /// Van der Pol oscillator with `a = 5`.
    pub fn van_der_pol_default() -> Self {
        System::VanDerPol { a: T::lit(5.0) }
    }

    /// Hindmarsh-Rose neuron in the slow-fast transient regime:
    /// `a = (1, 2.7, 1, 5, 4)`, `epsilon = 0.01`, `i = 2.4`, `x_rest = -1.6`.
    pub fn hindmarsh_rose_default() -> Self {
        System::HindmarshRose {
            a1: T::one(),
            a2: T::lit(2.7),
            a3: T::one(),
            a4: T::lit(5.0),
            a5: T::lit(4.0),
            epsilon: T::lit(0.01),
            i: T::lit(2.4),
            x_rest: T::lit(-1.6),
        }
    }

    /// State dimension of the system.
    pub fn dim(&self) -> usize {
        match self {
            System::Lorenz { .. } | System::HindmarshRose { .. } => 3,
            System::VanDerPol { .. } => 2,
        }
    }

    /// Validate parameter constraints (`a > 0`, `0 < epsilon < 1`).
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            System::Lorenz { a1, a2, a3 } => {
                a1.is_finite() && a2.is_finite() && a3.is_finite()
            }
            System::VanDerPol { a } => a.is_finite() && *a > T::zero(),
            System::HindmarshRose { epsilon, .. } => {
                *epsilon > T::zero() && *epsilon < T::one()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("system parameters violate their constraints"))
        }
    }

    /// Short lowercase identifier used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            System::Lorenz { .. } => "lorenz",
            System::VanDerPol { .. } => "van_der_pol",
            System::HindmarshRose { .. } => "hindmarsh_rose",
        }
    }

    /// The vector field `v(x)`.
    pub fn vector_field(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match *self {
            System::Lorenz { a1, a2, a3 } => {
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                vec![
                    a1 * x1 + x2 * x3,
                    a2 * (x2 - x3),
                    -x1 * x2 + a3 * x2 - x3,
                ]
            }
            System::VanDerPol { a } => {
                let (x1, x2) = (x[0], x[1]);
                vec![x2, a * (T::one() - x1 * x1) * x2 - x1]
            }
            System::HindmarshRose {
                a1,
                a2,
                a3,
                a4,
                a5,
                epsilon,
                i,
                x_rest,
            } => {
                let (x1, x2, x3) = (x[0], x[1], x[2]);
                let x1sq = x1 * x1;
                vec![
                    x2 - a1 * x1sq * x1 + a2 * x1sq - x3 + i,
                    a3 - a4 * x1sq - x2,
                    epsilon * (a5 * (x1 - x_rest) - x3),
                ]
            }
        })
    }
}

/// Free-function form of [`System::vector_field`].
pub fn vector_field<T: Scalar>(sys: &System<T>, x: &[T]) -> Result<Vec<T>> {
    sys.vector_field(x)
}

fn check_state<T: Scalar>(x: &[T], time: T, step: usize) -> Result<()> {
    let limit = T::lit(DIVERGENCE_LIMIT);
    if x.iter().all(|v| v.is_finite() && v.abs() <= limit) {
        Ok(())
    } else {
        Err(Error::Divergence {
            time: time.as_f64(),
            step,
        })
    }
}

/// Advance `x` by `dt` with classical RK4 using `substeps` equal substeps.
///
/// `t_offset` only labels the divergence error when an intermediate state
/// blows up; the systems themselves are autonomous.
fn rk4_advance<T: Scalar>(
    sys: &System<T>,
    x: &[T],
    dt: T,
    substeps: usize,
    t_offset: T,
    step_index: usize,
) -> Result<Vec<T>> {
    let d = x.len();
    let h = dt / T::from_count(substeps);
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let mut state = x.to_vec();
    let mut stage = vec![T::zero(); d];
    for sub in 0..substeps {
        let k1 = sys.vector_field(&state)?;
        for j in 0..d {
            stage[j] = state[j] + half * h * k1[j];
        }
        let k2 = sys.vector_field(&stage)?;
        for j in 0..d {
            stage[j] = state[j] + half * h * k2[j];
        }
        let k3 = sys.vector_field(&stage)?;
        for j in 0..d {
            stage[j] = state[j] + h * k3[j];
        }
        let k4 = sys.vector_field(&stage)?;
        for j in 0..d {
            state[j] = state[j] + h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
        }
        let t_here = t_offset + h * T::from_count(sub + 1);
        check_state(&state, t_here, step_index)?;
    }
    Ok(state)
}

/// One flow-map application: advance `x` by `dt` with RK4.
pub fn integrate_step<T: Scalar>(
    sys: &System<T>,
    x: &[T],
    dt: T,
    substeps: usize,
) -> Result<Vec<T>> {
    if !(dt > T::zero()) {
        return Err(Error::invalid("dt must be positive"));
    }
    if substeps == 0 {
        return Err(Error::invalid("substeps must be at least 1"));
    }
    check_state(x, T::zero(), 0)?;
    rk4_advance(sys, x, dt, substeps, T::zero(), 0)
}

/// A simulated or emulated path: row `k` of `states` is the state at
/// `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub t0: T,
    pub dt: T,
    pub states: Matrix<T>,
}

impl<T: Scalar> Trajectory<T> {
    /// Number of steps taken (rows minus one).
    pub fn n_steps(&self) -> usize {
        self.states.nrows().saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn time_at(&self, row: usize) -> T {
        self.t0 + self.dt * T::from_count(row)
    }

    pub fn state_at(&self, row: usize) -> &[T] {
        self.states.row(row)
    }

    /// Final simulated time.
    pub fn total_time(&self) -> T {
        self.time_at(self.n_steps())
    }
}

/// Simulate the system from `x0` for total time `t_final` at fixed step `dt`.
///
/// The number of steps is `round(t_final / dt)`.
pub fn simulate_trajectory<T: Scalar>(
    sys: &System<T>,
    x0: &[T],
    t_final: T,
    dt: T,
) -> Result<Trajectory<T>> {
    if !(dt > T::zero()) || t_final < dt {
        return Err(Error::invalid("need t_final >= dt > 0"));
    }
    let n_step = (t_final / dt).round().as_f64() as usize;
    let d = sys.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x0.len(),
        });
    }
    check_state(x0, T::zero(), 0)?;
    let mut states = Matrix::zeros(n_step + 1, d);
    states.row_mut(0).copy_from_slice(x0);
    let mut current = x0.to_vec();
    for k in 0..n_step {
        let t_here = dt * T::from_count(k);
        current = rk4_advance(sys, &current, dt, 1, t_here, k + 1)?;
        states.row_mut(k + 1).copy_from_slice(&current);
    }
    Ok(Trajectory {
        t0: T::zero(),
        dt,
        states,
    })
}

/// Flow-map outputs for a design of initial conditions: row `i` is the state
/// reached from design point `i` after one step of length `dt`.
///
/// Divergence errors are tagged with the offending design row.
pub fn flow_map_dataset<T: Scalar>(
    sys: &System<T>,
    design: &DesignMatrix<T>,
    dt: T,
) -> Result<Matrix<T>> {
    if design.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: design.dim(),
        });
    }
    let mut out = Matrix::zeros(design.len(), sys.dim());
    for i in 0..design.len() {
        let next = integrate_step(sys, design.point(i), dt, 1).map_err(|e| match e {
            Error::Divergence { time, .. } => Error::Divergence { time, step: i },
            other => other,
        })?;
        out.row_mut(i).copy_from_slice(&next);
    }
    Ok(out)
}
