use clarabel::solver::SupportedConeT;

use super::canonical::{canonicalize, StandardForm};
use super::{ConicError, ConicProblem, ConicSolution};
use crate::scalar::{dot, inf_norm, norm2, Scalar};

/// Relative KKT residuals of a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T> {
    /// Distance of `b − A x` from the primal cone, over `1 + max(‖b‖∞, ‖Ax‖∞)`.
    pub primal: T,
    /// `‖c + Aᵀz‖∞` over `1 + max(‖c‖∞, ‖Aᵀz‖∞)`, or the dual-cone violation of `z` if larger.
    pub dual: T,
    /// `|cᵀx + bᵀz|` over `1 + max(|cᵀx|, |bᵀz|)`.
    pub gap: T,
}

impl<T: Scalar> KktResiduals<T> {
    pub fn nan() -> Self {
        Self {
            primal: T::nan(),
            dual: T::nan(),
            gap: T::nan(),
        }
    }

    pub fn max(&self) -> T {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Recomputes the residuals of `solution` against `problem` from scratch.
///
/// Does not consult any number reported by the solver backend.
pub fn kkt_residuals<T: Scalar>(
    problem: &ConicProblem<T>,
    solution: &ConicSolution<T>,
) -> Result<KktResiduals<T>, ConicError> {
    let sf = canonicalize(problem)?;
    if solution.x.len() != sf.n || solution.z.len() != sf.m() {
        return Err(ConicError::Dimension(format!(
            "solution has {} primal / {} dual entries, problem needs {} / {}",
            solution.x.len(),
            solution.z.len(),
            sf.n,
            sf.m()
        )));
    }
    Ok(residuals_in_standard_form(&sf, &solution.x, &solution.z))
}

/// Per cone segment, the amount by which `v` lies outside the cone
/// (`dual = true` checks the dual cone instead).
fn cone_violation<T: Scalar>(sf: &StandardForm<T>, v: &[T], dual: bool) -> T {
    let mut worst = T::zero();
    let mut r = 0;
    for cone in &sf.cones {
        match *cone {
            SupportedConeT::ZeroConeT(d) => {
                if !dual {
                    worst = worst.max(inf_norm(&v[r..r + d]));
                }
                r += d;
            }
            SupportedConeT::NonnegativeConeT(d) => {
                for &x in &v[r..r + d] {
                    worst = worst.max(-x);
                }
                r += d;
            }
            SupportedConeT::SecondOrderConeT(d) => {
                let head = v[r];
                let tail = norm2(&v[r + 1..r + d]);
                worst = worst.max(tail - head);
                r += d;
            }
            _ => unreachable!("only zero, nonnegative and second-order cones are emitted"),
        }
    }
    worst
}

pub(crate) fn residuals_in_standard_form<T: Scalar>(sf: &StandardForm<T>, x: &[T], z: &[T]) -> KktResiduals<T> {
    let ax = sf.a_mul(x);
    let slack: Vec<T> = sf.b.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
    let primal = cone_violation(sf, &slack, false) / (T::one() + inf_norm(&sf.b).max(inf_norm(&ax)));

    let atz = sf.at_mul(z);
    let stationarity: Vec<T> = sf.q.iter().zip(&atz).map(|(&c, &a)| c + a).collect();
    let dual_scale = T::one() + inf_norm(&sf.q).max(inf_norm(&atz));
    let dual = (inf_norm(&stationarity) / dual_scale)
        .max(cone_violation(sf, z, true) / (T::one() + inf_norm(z)));

    let cx = dot(&sf.q, x);
    let bz = dot(&sf.b, z);
    let gap = (cx + bz).abs() / (T::one() + cx.abs().max(bz.abs()));
    KktResiduals { primal, dual, gap }
}
