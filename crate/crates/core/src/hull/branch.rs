use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{default_tol, Hull, HullConstraint, HullError, Point};
use crate::conic::{AffineExpr, ConeKind, ConicProblem};
use crate::feeder::{Branch, Bus};
use crate::scalar::Scalar;

/// Box of one branch and its sending bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchBounds<T> {
    pub v_min: T,
    pub v_max: T,
    pub v_nom: T,
    pub s_max: T,
    pub l_max: T,
}

impl<T: Scalar> BranchBounds<T> {
    /// Voltage 0.9–1.1 pu (squared 0.81–1.21), unit nominal voltage and rating.
    pub fn unit() -> Self {
        Self {
            v_min: T::lit(0.81),
            v_max: T::lit(1.21),
            v_nom: T::one(),
            s_max: T::one(),
            l_max: T::one(),
        }
    }

    pub fn from_branch(branch: &Branch<T>, sending: &Bus<T>) -> Self {
        Self {
            v_min: sending.v_min,
            v_max: sending.v_max,
            v_nom: sending.v_nom,
            s_max: branch.s_max,
            l_max: branch.l_max,
        }
    }

    fn check(&self) -> Result<(), HullError> {
        let ok = self.v_min > T::zero()
            && self.v_min <= self.v_nom
            && self.v_nom < self.v_max
            && self.s_max > T::zero()
            && self.l_max > T::zero();
        if !ok {
            return Err(HullError::InconsistentLimits(format!(
                "need 0 < v_min <= v_nom < v_max and positive ratings, got v = [{}, {}, {}], s_max = {}, l_max = {}",
                self.v_min, self.v_nom, self.v_max, self.s_max, self.l_max
            )));
        }
        let s2 = self.s_max * self.s_max;
        let coupled = self.l_max * self.v_nom;
        let tol = T::lit(1e-9).max(T::lit(64.0) * T::epsilon() * s2.max(T::one()));
        if (s2 - coupled).abs() > tol {
            return Err(HullError::InconsistentLimits(format!(
                "s_max² = {s2} but l_max·v_nom = {coupled}"
            )));
        }
        Ok(())
    }
}

/// Hull of `{v·ℓ = P² + Q²} ∩ box`: the rotated cone `P² + Q² <= ℓ·v` plus
/// one cut `c·x <= d` joining the two corner loci of the feasible `(ℓ, v)` set.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchHull<T> {
    pub bounds: BranchBounds<T>,
    /// `(0, 0, v_max, l_max)`
    pub cut: Point<T>,
    /// `l_max·(v_max + v_nom)`
    pub offset: T,
}

pub fn make_branch_hull<T: Scalar>(branch: &Branch<T>, sending: &Bus<T>) -> Result<BranchHull<T>, HullError> {
    BranchHull::new(BranchBounds::from_branch(branch, sending))
}

/// Convex weights and vertices reproducing a facet point.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub gamma: [T; 4],
    /// Endpoints of the `(P, Q)` chord through the point.
    pub pq: [[T; 2]; 2],
    /// The four vertices, each on `v·ℓ = P² + Q²`.
    pub anchors: [Point<T>; 4],
}

impl<T: Scalar> Decomposition<T> {
    pub fn reconstruct(&self) -> Point<T> {
        let mut out = [T::zero(); 4];
        for (g, a) in self.gamma.iter().zip(&self.anchors) {
            for k in 0..4 {
                out[k] += *g * a[k];
            }
        }
        out
    }
}

/// Membership in the four 3-variable projections of the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projections {
    /// `(P, Q, ℓ)`: `P² + Q² <= v_max·ℓ`, `0 <= ℓ <= l_max`
    pub pql: bool,
    /// `(P, Q, v)`: `P² + Q² <= l_max·v`, `v_min <= v <= v_max`
    pub pqv: bool,
    /// `(P, ℓ, v)`: `P² <= ℓ·v` and the cut
    pub plv: bool,
    /// `(Q, ℓ, v)`: `Q² <= ℓ·v` and the cut
    pub qlv: bool,
}

impl Projections {
    pub fn all(&self) -> bool {
        self.pql && self.pqv && self.plv && self.qlv
    }
}

impl<T: Scalar> BranchHull<T> {
    pub fn new(bounds: BranchBounds<T>) -> Result<Self, HullError> {
        bounds.check()?;
        Ok(Self {
            cut: [T::zero(), T::zero(), bounds.v_max, bounds.l_max],
            offset: bounds.l_max * (bounds.v_max + bounds.v_nom),
            bounds,
        })
    }

    pub fn unit() -> Self {
        Self::new(BranchBounds::unit()).expect("unit bounds are consistent")
    }

    pub fn cut_lhs(&self, x: &Point<T>) -> T {
        super::dot4(&self.cut, x)
    }

    /// `v·ℓ − P² − Q²`, nonnegative inside the cone.
    pub fn cone_residual(&self, x: &Point<T>) -> T {
        x[3] * x[2] - x[0] * x[0] - x[1] * x[1]
    }

    fn box_slacks(&self, x: &Point<T>) -> [(HullConstraint, T); 6] {
        let b = &self.bounds;
        [
            (HullConstraint::BranchCone, -self.cone_residual(x)),
            (
                HullConstraint::Thermal,
                x[0] * x[0] + x[1] * x[1] - b.s_max * b.s_max,
            ),
            (HullConstraint::CurrentLower, -x[2]),
            (HullConstraint::CurrentUpper, x[2] - b.l_max),
            (HullConstraint::VoltageLower, b.v_min - x[3]),
            (HullConstraint::VoltageUpper, x[3] - b.v_max),
        ]
    }

    /// Membership in the cone-only relaxation (no cut).
    pub fn cone_membership(&self, x: &Point<T>) -> super::Membership<T> {
        super::Membership::from_slacks(self.box_slacks(x), default_tol())
    }

    /// `(coeffs over [P, Q, ℓ, v] columns, rhs)` of the cut row.
    pub fn cut_row(&self, cols: [usize; 4]) -> (Vec<(usize, T)>, T) {
        (vec![(cols[2], self.cut[2]), (cols[3], self.cut[3])], self.offset)
    }

    /// Members of `P² + Q² <= ℓ·v` for a rotated block.
    pub fn cone_members(cols: [usize; 4]) -> Vec<AffineExpr<T>> {
        vec![
            AffineExpr::scaled(cols[2], T::lit(0.5)),
            AffineExpr::col(cols[3]),
            AffineExpr::col(cols[0]),
            AffineExpr::col(cols[1]),
        ]
    }

    /// Carathéodory witness of a point on the cut facet.
    pub fn decompose(&self, x: &Point<T>) -> Result<Decomposition<T>, HullError> {
        let b = &self.bounds;
        let residual = self.cut_lhs(x) - self.offset;
        let tol = T::lit(1e-9);
        if residual.abs() > tol * self.offset.max(T::one()) {
            return Err(HullError::NotOnFacet(residual.as_f64()));
        }
        if x[3] < b.v_nom - tol || x[3] > b.v_max + tol {
            return Err(HullError::NotOnFacet(residual.as_f64()));
        }
        let s2 = b.l_max * b.v_nom;
        let rho2 = x[0] * x[0] + x[1] * x[1];
        if rho2 > s2 * (T::one() + tol) {
            return Err(HullError::OutsideDisk);
        }
        let (p, q) = (x[0], x[1]);
        let half = (s2 - rho2).max(T::zero()).sqrt();
        let pq = if rho2 == T::zero() {
            [[b.s_max, T::zero()], [-b.s_max, T::zero()]]
        } else {
            let rho = rho2.sqrt();
            let (dp, dq) = (-q / rho * half, p / rho * half);
            [[p + dp, q + dq], [p - dp, q - dq]]
        };
        let g13 = ((b.v_max - x[3]) / (b.v_max - b.v_nom)).max(T::zero()).min(T::one());
        let half_g = g13 / T::lit(2.0);
        let half_rest = (T::one() - g13) / T::lit(2.0);
        let l_hi = s2 / b.v_max;
        let anchors = [
            [pq[0][0], pq[0][1], b.l_max, b.v_nom],
            [pq[0][0], pq[0][1], l_hi, b.v_max],
            [pq[1][0], pq[1][1], b.l_max, b.v_nom],
            [pq[1][0], pq[1][1], l_hi, b.v_max],
        ];
        Ok(Decomposition {
            gamma: [half_g, half_rest, half_g, half_rest],
            pq,
            anchors,
        })
    }

    pub fn projections(&self, x: &Point<T>) -> Projections {
        let b = &self.bounds;
        let tol = default_tol::<T>();
        let [p, q, l, v] = *x;
        let cut_ok = self.cut_lhs(x) - self.offset <= tol;
        let l_box = l >= -tol && l <= b.l_max + tol;
        let v_box = v >= b.v_min - tol && v <= b.v_max + tol;
        Projections {
            pql: p * p + q * q <= b.v_max * l + tol && l_box,
            pqv: p * p + q * q <= b.l_max * v + tol && v_box,
            plv: p * p <= l * v + tol && cut_ok && l_box && v_box,
            qlv: q * q <= l * v + tol && cut_ok && l_box && v_box,
        }
    }
}

impl<T: Scalar> Hull<T> for BranchHull<T> {
    fn slacks(&self, x: &Point<T>) -> Vec<(HullConstraint, T)> {
        let mut out = self.box_slacks(x).to_vec();
        out.insert(1, (HullConstraint::BranchCut, self.cut_lhs(x) - self.offset));
        out
    }

    fn emit(&self, p: &mut ConicProblem<T>, cols: [usize; 4], label: &str) {
        let b = &self.bounds;
        p.add_cone(ConeKind::RotatedSoc, format!("{label}.cone"), Self::cone_members(cols));
        let (coeffs, rhs) = self.cut_row(cols);
        p.add_le(format!("{label}.cut"), coeffs, rhs);
        p.add_cone(
            ConeKind::Soc,
            format!("{label}.thermal"),
            vec![
                AffineExpr::constant(b.s_max),
                AffineExpr::col(cols[0]),
                AffineExpr::col(cols[1]),
            ],
        );
        p.add_ge(format!("{label}.l_lo"), vec![(cols[2], T::one())], T::zero());
        p.add_le(format!("{label}.l_hi"), vec![(cols[2], T::one())], b.l_max);
        p.add_ge(format!("{label}.v_lo"), vec![(cols[3], T::one())], b.v_min);
        p.add_le(format!("{label}.v_hi"), vec![(cols[3], T::one())], b.v_max);
    }
}

/// Uniform point of the disk of radius `r`.
pub(super) fn disk_point(rng: &mut impl Rng, r: f64) -> (f64, f64) {
    let rad = r * rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    (rad * th.cos(), rad * th.sin())
}

/// `n` points on `v·ℓ = P² + Q²` within the box; deterministic in `seed`.
pub fn sample_omega0<T: Scalar>(bounds: &BranchBounds<T>, n: usize, seed: u64) -> Vec<Point<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, v_lo, v_hi, l_max) = (
        bounds.s_max.as_f64(),
        bounds.v_min.as_f64(),
        bounds.v_max.as_f64(),
        bounds.l_max.as_f64(),
    );
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (p, q) = disk_point(&mut rng, s);
        let v = rng.gen_range(v_lo..=v_hi);
        let l = (p * p + q * q) / v;
        if l > l_max {
            continue;
        }
        let (p, q, v) = (T::lit(p), T::lit(q), T::lit(v));
        // recompute in T so the equation holds at the working precision
        out.push([p, q, (p * p + q * q) / v, v]);
    }
    out
}

/// `n` points of the same set, spread over its boundary strata as well as
/// its interior.
///
/// Support minimizers of the set sit mostly on lower-dimensional pieces (the
/// voltage faces, the current limit, the thermal circle and their
/// intersections), which uniform sampling almost never hits. Shares: 40%
/// uniform, 15% each on the thermal surface and the two voltage faces, 10% on
/// the current-limit face, 5% on the corner circles and the zero-flow segment.
pub fn sample_omega0_stratified<T: Scalar>(bounds: &BranchBounds<T>, n: usize, seed: u64) -> Vec<Point<T>> {
    let n_uniform = n * 2 / 5;
    let mut out = sample_omega0(bounds, n_uniform, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a7);
    let (s, v_lo, v_hi, l_max) = (
        bounds.s_max.as_f64(),
        bounds.v_min.as_f64(),
        bounds.v_max.as_f64(),
        bounds.l_max.as_f64(),
    );
    // thermal surface needs l = s²/v <= l_max
    let v_thermal = (s * s / l_max).clamp(v_lo, v_hi);
    let circle = |rng: &mut ChaCha8Rng, r: f64| {
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        (r * th.cos(), r * th.sin())
    };
    let rest = n - n_uniform;
    for k in 0..rest {
        let share = (k as f64 + 0.5) / rest as f64 * 0.6;
        let (p, q, v) = if share < 0.15 {
            let v = rng.gen_range(v_thermal..=v_hi);
            let (p, q) = circle(&mut rng, s);
            (p, q, v)
        } else if share < 0.30 {
            let (p, q) = disk_point(&mut rng, s.min((l_max * v_hi).sqrt()));
            (p, q, v_hi)
        } else if share < 0.45 {
            let (p, q) = disk_point(&mut rng, s.min((l_max * v_lo).sqrt()));
            (p, q, v_lo)
        } else if share < 0.55 {
            let v = rng.gen_range(v_lo..=v_thermal);
            let (p, q) = circle(&mut rng, (l_max * v).sqrt().min(s));
            (p, q, v)
        } else {
            match k % 4 {
                0 => {
                    let (p, q) = circle(&mut rng, s);
                    (p, q, v_hi)
                }
                1 => {
                    let (p, q) = circle(&mut rng, s);
                    (p, q, v_thermal)
                }
                2 => {
                    let (p, q) = circle(&mut rng, (l_max * v_lo).sqrt().min(s));
                    (p, q, v_lo)
                }
                _ => (0.0, 0.0, rng.gen_range(v_lo..=v_hi)),
            }
        };
        let (p, q, v) = (T::lit(p), T::lit(q), T::lit(v));
        out.push([p, q, (p * p + q * q) / v, v]);
    }
    out
}

/// `n` points on the cut facet with `(P, Q)` in the thermal disk.
pub fn sample_facet<T: Scalar>(hull: &BranchHull<T>, n: usize, seed: u64) -> Vec<Point<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &hull.bounds;
    (0..n)
        .map(|_| {
            let (p, q) = disk_point(&mut rng, b.s_max.as_f64());
            let v = T::lit(rng.gen_range(b.v_nom.as_f64()..=b.v_max.as_f64()));
            let l = (hull.offset - b.l_max * v) / b.v_max;
            [T::lit(p), T::lit(q), l, v]
        })
        .collect()
}
