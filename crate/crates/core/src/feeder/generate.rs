//! Seeded synthetic radial feeders with PV and storage sized like common test feeders.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Base, Branch, Bus, DesUnit, Feeder, FeederData, FeederError, Profiles};
use crate::scalar::Scalar;

/// Fraction of peak demand by hour of day.
const LOAD_SHAPE: [f64; 24] = [
    0.55, 0.50, 0.48, 0.47, 0.48, 0.55, 0.68, 0.80, 0.85, 0.83, 0.80, 0.78, 0.77, 0.76, 0.78,
    0.82, 0.90, 0.97, 1.00, 0.98, 0.92, 0.82, 0.70, 0.60,
];

/// Day-ahead energy price by hour of day, $/MWh.
const PRICE_SHAPE: [f64; 24] = [
    28.0, 26.0, 25.0, 25.0, 26.0, 30.0, 38.0, 45.0, 48.0, 46.0, 44.0, 42.0, 40.0, 39.0, 40.0,
    43.0, 50.0, 60.0, 65.0, 58.0, 50.0, 42.0, 35.0, 30.0,
];

/// Largest linearized squared-voltage drop at peak demand after impedance scaling.
const TARGET_DROP: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceShape {
    /// Same price in every period, e.g. −30 $/MWh.
    Flat(f64),
    /// Typical day-ahead curve.
    Daily,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub buses: usize,
    /// Installed PV over peak demand, in [0, 1].
    pub penetration: f64,
    /// Number of periods; 1 gives a rated snapshot (peak demand, full PV).
    pub horizon: usize,
    pub price: PriceShape,
    /// Storage unit count; `None` picks 0–4 from the feeder size.
    pub des_units: Option<usize>,
}

impl InstanceSpec {
    pub fn snapshot(buses: usize, penetration: f64) -> Self {
        Self {
            buses,
            penetration,
            horizon: 1,
            price: PriceShape::Flat(-30.0),
            des_units: None,
        }
    }

    pub fn daily(buses: usize, penetration: f64) -> Self {
        Self {
            buses,
            penetration,
            horizon: 24,
            price: PriceShape::Daily,
            des_units: None,
        }
    }
}

fn default_des_count(n: usize) -> usize {
    match n {
        0..=4 => 0,
        5..=20 => 2,
        21..=60 => 3,
        _ => 4,
    }
}

fn pv_site_count(n: usize) -> usize {
    let k = ((n as f64).sqrt().round() as usize).saturating_sub(1).max(1);
    k.min(n - 1)
}

fn pv_shape(hour: f64) -> f64 {
    if (6.0..=19.0).contains(&hour) {
        (std::f64::consts::PI * (hour - 6.0) / 13.0).sin().max(0.0)
    } else {
        0.0
    }
}

/// Builds a deterministic synthetic feeder; the same spec and seed always give the same feeder.
pub fn gen_instance<T: Scalar>(spec: &InstanceSpec, seed: u64) -> Result<Feeder<T>, FeederError> {
    let n = spec.buses;
    if n < 2 {
        return Err(FeederError::InfeasibleSpec(format!("{n} buses; need at least 2")));
    }
    if !(0.0..=1.0).contains(&spec.penetration) {
        return Err(FeederError::InfeasibleSpec(format!(
            "PV penetration {} outside [0, 1]",
            spec.penetration
        )));
    }
    if spec.horizon == 0 {
        return Err(FeederError::InfeasibleSpec("horizon 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = spec.horizon;

    // Tree: each bus hangs off one of the few buses before it.
    let parent: Vec<usize> = (0..n)
        .map(|k| if k == 0 { 0 } else { rng.gen_range(k.saturating_sub(3)..k) })
        .collect();

    // Peak demand per bus.
    let mut p_peak = vec![0.0; n];
    let mut q_peak = vec![0.0; n];
    for k in 1..n {
        if rng.gen_bool(0.85) || k == n - 1 {
            let p: f64 = rng.gen_range(0.01..0.05);
            let pf: f64 = rng.gen_range(0.88..0.97);
            p_peak[k] = p;
            q_peak[k] = p * pf.acos().tan();
        }
    }
    let peak: f64 = p_peak.iter().sum();

    // PV sites sized to the requested penetration.
    let mut pv_cap = vec![0.0; n];
    if spec.penetration > 0.0 {
        let sites = pv_site_count(n);
        let each = spec.penetration * peak / sites as f64;
        for i in sample(&mut rng, n - 1, sites).into_iter() {
            pv_cap[i + 1] = each;
        }
    }

    // Storage.
    let n_des = spec.des_units.unwrap_or_else(|| default_des_count(n)).min(n - 1);
    let mut des = Vec::with_capacity(n_des);
    if n_des > 0 {
        let total: f64 = rng.gen_range(0.25..0.5) * peak;
        let s = total / n_des as f64;
        let mut sites: Vec<usize> = sample(&mut rng, n - 1, n_des).into_iter().map(|i| i + 1).collect();
        sites.sort_unstable();
        for bus in sites {
            let hours: f64 = rng.gen_range(2.0..4.0);
            let r_eq = 0.03 / s;
            let batt_share: f64 = rng.gen_range(0.4..0.7);
            let e_max = hours * s;
            des.push((bus, s, r_eq * batt_share, r_eq * (1.0 - batt_share), e_max));
        }
    }
    let mut des_cap = vec![0.0; n];
    for &(bus, s, ..) in &des {
        des_cap[bus] += s;
    }

    // Downstream sums (children always have larger indices).
    let mut down_p = p_peak.clone();
    let mut down_q = q_peak.clone();
    let mut down_s: Vec<f64> = (0..n)
        .map(|k| p_peak[k].hypot(q_peak[k]).max(pv_cap[k] + des_cap[k]))
        .collect();
    for k in (1..n).rev() {
        let j = parent[k];
        down_p[j] += down_p[k];
        down_q[j] += down_q[k];
        down_s[j] += down_s[k];
    }

    // Raw impedances, then a common scale so the worst linearized drop hits the target.
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            if k == 0 {
                return (0.0, 0.0);
            }
            let r: f64 = rng.gen_range(0.5..1.5);
            let xr: f64 = rng.gen_range(0.5..2.0);
            (r, r * xr)
        })
        .collect();
    let mut drop = vec![0.0; n];
    for k in 1..n {
        let (r, x) = raw[k];
        drop[k] = drop[parent[k]] + 2.0 * (r * down_p[k] + x * down_q[k]);
    }
    let worst = drop.iter().cloned().fold(0.0, f64::max);
    let scale = if worst > 0.0 { TARGET_DROP / worst } else { 0.01 };

    let lit = T::lit;
    let id = |k: usize| (k + 1).to_string();
    let mut buses: Vec<Bus<T>> = (0..n)
        .map(|k| if k == 0 { Bus::substation(id(k)) } else { Bus::new(id(k)) })
        .collect();
    if n >= 5 {
        buses[1].k_tx = lit(0.002);
    }
    let branches = (1..n)
        .map(|k| {
            let s_max = 1.2 * down_s[k] + 0.05;
            let v_nom = buses[parent[k]].v_nom;
            Branch {
                from: id(parent[k]),
                to: id(k),
                r: lit(raw[k].0 * scale),
                x: lit(raw[k].1 * scale),
                s_max: lit(s_max),
                l_max: lit(s_max) * lit(s_max) / v_nom,
            }
        })
        .collect();
    let des_units = des
        .iter()
        .map(|&(bus, s, r_batt, r_cvt, e_max)| DesUnit {
            bus: id(bus),
            s_max: lit(s),
            r_batt: lit(r_batt),
            r_cvt: lit(r_cvt),
            e_min: lit(0.1 * e_max),
            e_max: lit(e_max),
            e_surplus: lit(0.5 * e_max),
        })
        .collect();

    let (load_mult, pv_mult, price): (Vec<f64>, Vec<f64>, Vec<f64>) = if h == 1 {
        let price = match spec.price {
            PriceShape::Flat(c) => c,
            PriceShape::Daily => PRICE_SHAPE.iter().sum::<f64>() / 24.0,
        };
        (vec![1.0], vec![1.0], vec![price])
    } else {
        let hours: Vec<f64> = (0..h).map(|t| t as f64 * 24.0 / h as f64).collect();
        let pick = |table: &[f64; 24], hr: f64| table[(hr.floor() as usize).min(23)];
        (
            hours.iter().map(|&hr| pick(&LOAD_SHAPE, hr)).collect(),
            hours.iter().map(|&hr| pv_shape(hr + 0.5)).collect(),
            hours
                .iter()
                .map(|&hr| match spec.price {
                    PriceShape::Flat(c) => c,
                    PriceShape::Daily => pick(&PRICE_SHAPE, hr),
                })
                .collect(),
        )
    };
    let series = |peak: &[f64], mult: &[f64]| -> Vec<Vec<T>> {
        peak.iter()
            .map(|&p| mult.iter().map(|&m| lit(p * m)).collect())
            .collect()
    };
    let profiles = Profiles {
        horizon: h,
        dt: lit(24.0 / h as f64),
        load_p: series(&p_peak, &load_mult),
        load_q: series(&q_peak, &load_mult),
        pv: series(&pv_cap, &pv_mult),
        price: Some(price.into_iter().map(lit).collect()),
    };
    let sub_rating = lit(2.0 * peak + des_cap.iter().sum::<f64>());
    Feeder::new(FeederData {
        buses,
        branches,
        des_units,
        profiles,
        sub_rating,
        base: Base {
            mva: T::one(),
            kv: lit(12.47),
        },
    })
}
