use rand::Rng;
use serde::{Deserialize, Serialize};

use super::blp::certify;
use crate::error::{Error, Result};
use crate::model::{Assignment, ConstrainedModel, ModelBuilder, QuadraticExpr, Sense};
use crate::solvers::stream_rng;

/// Largest fleet and horizon [`uc_oracle`] enumerates.
pub const UC_ORACLE_MAX_GENERATORS: usize = 4;
pub const UC_ORACLE_MAX_PERIODS: usize = 4;

/// Prior downtime given to units that start off by default: long enough to
/// be a cold start and to clear any minimum down time.
pub const DEFAULT_PRIOR_DOWNTIME: usize = 24;

/// State of a unit before the first period: on or off for `periods`
/// periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialState {
    pub on: bool,
    pub periods: usize,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            on: false,
            periods: DEFAULT_PRIOR_DOWNTIME,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    /// MW produced whenever committed, priced by `min_power_cost`.
    pub pmin: f64,
    pub pmax: f64,
    /// Cost per MWh of each equal-width segment above `pmin`.
    pub slopes: Vec<f64>,
    pub min_power_cost: f64,
    /// Startup cost per category, hottest first; non-decreasing.
    pub startup_costs: Vec<f64>,
    /// Category `s` (all but the last) is available when the unit has been
    /// off for at most `startup_lags[s]` periods; the last category is
    /// always available.
    pub startup_lags: Vec<usize>,
    pub min_up: usize,
    pub min_down: usize,
    #[serde(default)]
    pub initial: InitialState,
}

impl Generator {
    pub fn segment_width(&self) -> f64 {
        (self.pmax - self.pmin) / self.slopes.len() as f64
    }

    /// Value of `u` in period `tau ≤ 0` (0 is the period just before the
    /// horizon).
    fn prior(&self, tau: isize) -> u8 {
        if self.initial.on || tau <= -(self.initial.periods as isize) {
            1
        } else {
            0
        }
    }
}

/// Fleet and hourly demand for the unit-commitment family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcSpec {
    pub generators: Vec<Generator>,
    /// MW per period.
    pub demand: Vec<f64>,
}

fn invalid(m: String) -> Error {
    Error::InvalidParams(m)
}

impl UcSpec {
    pub fn periods(&self) -> usize {
        self.demand.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.generators.is_empty() || self.demand.is_empty() {
            return Err(invalid("need at least one generator and one period".into()));
        }
        for (g, u) in self.generators.iter().enumerate() {
            let g = g + 1;
            if !(u.pmin >= 0.0 && u.pmin <= u.pmax && u.pmax.is_finite()) {
                return Err(invalid(format!("generator {g}: need 0 ≤ pmin ≤ pmax")));
            }
            if u.slopes.is_empty() || u.slopes.iter().any(|s| !s.is_finite()) {
                return Err(invalid(format!("generator {g}: need finite segment slopes")));
            }
            if !u.min_power_cost.is_finite() {
                return Err(invalid(format!("generator {g}: min_power_cost must be finite")));
            }
            let cs = &u.startup_costs;
            if cs.is_empty() || cs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(invalid(format!("generator {g}: need non-negative startup costs")));
            }
            if cs.windows(2).any(|w| w[0] > w[1]) {
                return Err(invalid(format!(
                    "generator {g}: startup costs must not decrease from hot to cold"
                )));
            }
            if u.startup_lags.len() + 1 != cs.len() || u.startup_lags.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!(
                    "generator {g}: need one increasing downtime lag per category but the last"
                )));
            }
            if u.min_up == 0 || u.min_down == 0 || u.initial.periods == 0 {
                return Err(invalid(format!(
                    "generator {g}: min up/down times and the initial period count must be ≥ 1"
                )));
            }
        }
        let capacity: f64 = self.generators.iter().map(|u| u.pmax).sum();
        for (t, &d) in self.demand.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid(format!("demand in period {} must be ≥ 0", t + 1)));
            }
            if d > capacity {
                return Err(Error::InfeasibleSpec(format!(
                    "demand {d} MW in period {} exceeds fleet capacity {capacity} MW",
                    t + 1
                )));
            }
        }
        Ok(())
    }

    /// Synthetic fleet of `g` units over `t` periods with `categories`
    /// startup categories and `segments` cost segments per unit.
    ///
    /// Units start off (cold); demand lies in `[0.4, 0.9]` of total capacity
    /// and never below the total minimum output, so committing every unit
    /// is always feasible.
    pub fn random(g: usize, t: usize, categories: usize, segments: usize, seed: u64) -> Result<Self> {
        if g == 0 || t == 0 || categories == 0 || segments == 0 {
            return Err(invalid("generators, periods, categories and segments must be ≥ 1".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let generators: Vec<Generator> = (0..g)
            .map(|_| {
                let pmax: f64 = rng.random_range(50.0..300.0);
                let pmin = pmax * rng.random_range(0.1..0.3);
                let mut slopes: Vec<f64> = (0..segments).map(|_| rng.random_range(10.0..60.0)).collect();
                slopes.sort_by(f64::total_cmp);
                let hot: f64 = rng.random_range(50.0..400.0);
                Generator {
                    pmin,
                    pmax,
                    slopes,
                    min_power_cost: rng.random_range(100.0..600.0),
                    startup_costs: (0..categories).map(|s| hot * (1.0 + 0.5 * s as f64)).collect(),
                    startup_lags: (1..categories).map(|s| 4 * s).collect(),
                    min_up: rng.random_range(1..=3),
                    min_down: rng.random_range(1..=3),
                    initial: InitialState::default(),
                }
            })
            .collect();
        let capacity: f64 = generators.iter().map(|u| u.pmax).sum();
        let floor: f64 = generators.iter().map(|u| u.pmin).sum();
        let demand = (0..t)
            .map(|_| (capacity * rng.random_range(0.4..0.9)).max(floor))
            .collect();
        Ok(Self { generators, demand })
    }
}

pub fn uc_commit(g: usize, t: usize) -> String {
    format!("u_{g}_{t}")
}

pub fn uc_startup(g: usize, t: usize, s: usize) -> String {
    format!("d_{g}_{t}_{s}")
}

pub fn uc_power(g: usize, l: usize, t: usize) -> String {
    format!("p_{g}_{l}_{t}")
}

/// `u_g(τ)` as a model term: a variable inside the horizon, a constant
/// before it.
fn commit_term(e: &mut QuadraticExpr, spec: &UcSpec, g: usize, tau: isize, coeff: f64) {
    if tau >= 1 {
        e.add_linear(&uc_commit(g, tau as usize), coeff);
    } else {
        e.add_offset(coeff * spec.generators[g - 1].prior(tau) as f64);
    }
}

fn push(b: &mut ModelBuilder, label: String, mut lhs: QuadraticExpr, sense: Sense, rhs: f64) {
    let k = lhs.offset();
    lhs.set_offset(0.0);
    b.constraint(label, lhs, sense, rhs - k);
}

/// Mixed-integer unit-commitment model: production (minimum-power plus
/// segment) and startup costs under power balance, segment capacity,
/// minimum up/down times and startup-category windows.
pub fn gen_unit_commitment(spec: &UcSpec) -> Result<ConstrainedModel> {
    spec.validate()?;
    let periods = spec.periods();
    let mut b = ModelBuilder::new();
    let mut obj = QuadraticExpr::new();
    for (gi, u) in spec.generators.iter().enumerate() {
        let g = gi + 1;
        for t in 1..=periods {
            b.binary(uc_commit(g, t));
            obj.add_linear(&uc_commit(g, t), u.min_power_cost);
            for (s, &cs) in u.startup_costs.iter().enumerate() {
                b.binary(uc_startup(g, t, s + 1));
                obj.add_linear(&uc_startup(g, t, s + 1), cs);
            }
            for (l, &slope) in u.slopes.iter().enumerate() {
                b.continuous(uc_power(g, l + 1, t), 0.0, u.segment_width());
                obj.add_linear(&uc_power(g, l + 1, t), slope);
            }
        }
    }
    b.objective(obj);

    for (t, &d) in spec.demand.iter().enumerate() {
        let t = t + 1;
        let mut e = QuadraticExpr::new();
        for (gi, u) in spec.generators.iter().enumerate() {
            e.add_linear(&uc_commit(gi + 1, t), u.pmin);
            for l in 1..=u.slopes.len() {
                e.add_linear(&uc_power(gi + 1, l, t), 1.0);
            }
        }
        push(&mut b, format!("balance_{t}"), e, Sense::Eq, d);
    }
    for (gi, u) in spec.generators.iter().enumerate() {
        let g = gi + 1;
        let w = u.segment_width();
        let s_count = u.startup_costs.len();
        for t in 1..=periods {
            for l in 1..=u.slopes.len() {
                let e = QuadraticExpr::linear_sum([(uc_power(g, l, t), 1.0), (uc_commit(g, t), -w)]);
                push(&mut b, format!("capacity_{g}_{l}_{t}"), e, Sense::Le, 0.0);
            }
        }
        // a start in period τ keeps the unit on through τ + UT − 1; a stop
        // keeps it off through τ + DT − 1
        for tau in 1..=periods {
            let ti = tau as isize;
            for t in tau + 1..=(tau + u.min_up - 1).min(periods) {
                let mut e = QuadraticExpr::new();
                commit_term(&mut e, spec, g, ti, 1.0);
                commit_term(&mut e, spec, g, ti - 1, -1.0);
                commit_term(&mut e, spec, g, t as isize, -1.0);
                push(&mut b, format!("min_up_{g}_{tau}_{t}"), e, Sense::Le, 0.0);
            }
            for t in tau + 1..=(tau + u.min_down - 1).min(periods) {
                let mut e = QuadraticExpr::new();
                commit_term(&mut e, spec, g, ti - 1, 1.0);
                commit_term(&mut e, spec, g, ti, -1.0);
                commit_term(&mut e, spec, g, t as isize, 1.0);
                push(&mut b, format!("min_down_{g}_{tau}_{t}"), e, Sense::Le, 1.0);
            }
        }
        let (held, fixed) = if u.initial.on {
            (u.min_up.saturating_sub(u.initial.periods), 1.0)
        } else {
            (u.min_down.saturating_sub(u.initial.periods), 0.0)
        };
        for t in 1..=held.min(periods) {
            let e = QuadraticExpr::linear_sum([(uc_commit(g, t), 1.0)]);
            push(&mut b, format!("initial_{g}_{t}"), e, Sense::Eq, fixed);
        }
        for t in 1..=periods {
            let ti = t as isize;
            let mut e = QuadraticExpr::new();
            for s in 1..=s_count {
                e.add_linear(&uc_startup(g, t, s), 1.0);
            }
            commit_term(&mut e, spec, g, ti, -1.0);
            commit_term(&mut e, spec, g, ti - 1, 1.0);
            push(&mut b, format!("startup_{g}_{t}"), e, Sense::Ge, 0.0);
            // category s needs the unit on within the last lag + 1 periods
            for (s, &lag) in u.startup_lags.iter().enumerate() {
                let mut e = QuadraticExpr::linear_sum([(uc_startup(g, t, s + 1), 1.0)]);
                for i in 1..=lag as isize + 1 {
                    commit_term(&mut e, spec, g, ti - i, -1.0);
                }
                push(&mut b, format!("category_{g}_{t}_{}", s + 1), e, Sense::Le, 0.0);
            }
            if s_count > 1 {
                let e = QuadraticExpr::linear_sum((1..=s_count).map(|s| (uc_startup(g, t, s), 1.0)));
                push(&mut b, format!("one_category_{g}_{t}"), e, Sense::Le, 1.0);
            }
        }
    }
    b.metadata("family", "uc")
        .metadata("generators", spec.generators.len().to_string())
        .metadata("periods", periods.to_string())
        .metadata(
            "conventions",
            "u_g_t, d_g_t_s (s = 1 hottest), p_g_l_t are 1-based; periods before the horizon \
             follow each unit's initial state",
        );
    let model = b.finish()?;
    certify(&model, witness(spec).map(|s| s.model_values(&model)))?;
    Ok(model)
}

/// A commitment plan with its cheapest startups and merit-order dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcSchedule {
    pub cost: f64,
    /// `commitment[g][t]`, 0-based.
    pub commitment: Vec<Vec<u8>>,
    /// 0-based startup category per `[g][t]`, if the unit starts then.
    pub startups: Vec<Vec<Option<usize>>>,
    /// MW per `[g][segment][t]` above `pmin`.
    pub dispatch: Vec<Vec<Vec<f64>>>,
}

impl UcSchedule {
    /// Values for every variable of the model generated from the same spec.
    pub fn model_values(&self, model: &ConstrainedModel) -> Vec<f64> {
        let mut a = Vec::new();
        for (g, row) in self.commitment.iter().enumerate() {
            for (t, &u) in row.iter().enumerate() {
                a.push((uc_commit(g + 1, t + 1), u as f64));
            }
        }
        let categories = |g: usize| {
            model
                .variables()
                .iter()
                .filter(|v| v.id.starts_with(&format!("d_{}_1_", g + 1)))
                .count()
        };
        for (g, row) in self.startups.iter().enumerate() {
            for (t, &s) in row.iter().enumerate() {
                for c in 0..categories(g) {
                    a.push((uc_startup(g + 1, t + 1, c + 1), (s == Some(c)) as u8 as f64));
                }
            }
        }
        for (g, segs) in self.dispatch.iter().enumerate() {
            for (l, row) in segs.iter().enumerate() {
                for (t, &p) in row.iter().enumerate() {
                    a.push((uc_power(g + 1, l + 1, t + 1), p));
                }
            }
        }
        let a = Assignment::from_pairs(a);
        model
            .variables()
            .iter()
            .map(|v| a.get(&v.id).unwrap_or(0.0))
            .collect()
    }
}

/// Startup cost and categories of one unit's on/off pattern, or `None` if
/// it breaks the initial state or the minimum up/down times.
fn unit_plan(u: &Generator, on: &[u8]) -> Option<(f64, Vec<Option<usize>>)> {
    let periods = on.len();
    let at = |tau: isize| if tau >= 1 { on[tau as usize - 1] } else { u.prior(tau) };
    let held = if u.initial.on {
        u.min_up.saturating_sub(u.initial.periods)
    } else {
        u.min_down.saturating_sub(u.initial.periods)
    };
    if (1..=held.min(periods)).any(|t| at(t as isize) != u.initial.on as u8) {
        return None;
    }
    let mut cost = 0.0;
    let mut starts = vec![None; periods];
    for tau in 1..=periods as isize {
        let (now, before) = (at(tau), at(tau - 1));
        let end = |len: usize| (tau + len as isize - 1).min(periods as isize);
        if now == 1 && before == 0 {
            if (tau..=end(u.min_up)).any(|t| at(t) == 0) {
                return None;
            }
            let mut down = 0usize;
            while at(tau - 1 - down as isize) == 0 {
                down += 1;
            }
            let cat = u
                .startup_lags
                .iter()
                .position(|&lag| down <= lag)
                .unwrap_or(u.startup_costs.len() - 1);
            cost += u.startup_costs[cat];
            starts[tau as usize - 1] = Some(cat);
        }
        if now == 0 && before == 1 && (tau..=end(u.min_down)).any(|t| at(t) == 1) {
            return None;
        }
    }
    Some((cost, starts))
}

/// Evaluates one commitment (`[g][t]`); `None` if infeasible.
pub fn evaluate_commitment(spec: &UcSpec, commitment: &[Vec<u8>]) -> Option<UcSchedule> {
    let periods = spec.periods();
    let mut cost = 0.0;
    let mut startups = Vec::new();
    for (u, on) in spec.generators.iter().zip(commitment) {
        let (c, s) = unit_plan(u, on)?;
        cost += c + u.min_power_cost * on.iter().filter(|&&b| b == 1).count() as f64;
        startups.push(s);
    }
    let mut dispatch: Vec<Vec<Vec<f64>>> = spec
        .generators
        .iter()
        .map(|u| vec![vec![0.0; periods]; u.slopes.len()])
        .collect();
    for (t, &d) in spec.demand.iter().enumerate() {
        let mut rest = d;
        let mut segs = Vec::new();
        for (g, u) in spec.generators.iter().enumerate() {
            if commitment[g][t] == 1 {
                rest -= u.pmin;
                for (l, &slope) in u.slopes.iter().enumerate() {
                    segs.push((slope, g, l, u.segment_width()));
                }
            }
        }
        let tol = 1e-9 * d.abs().max(1.0);
        if rest < -tol {
            return None;
        }
        segs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for (slope, g, l, width) in segs {
            if rest <= 0.0 {
                break;
            }
            let p = rest.min(width);
            dispatch[g][l][t] = p;
            cost += slope * p;
            rest -= p;
        }
        if rest > tol {
            return None;
        }
    }
    Some(UcSchedule {
        cost,
        commitment: commitment.to_vec(),
        startups,
        dispatch,
    })
}

/// A feasible schedule to certify a generated model: the cheapest
/// enumerated one when small enough, else all-on or all-off.
fn witness(spec: &UcSpec) -> Option<UcSchedule> {
    if spec.generators.len() <= UC_ORACLE_MAX_GENERATORS && spec.periods() <= UC_ORACLE_MAX_PERIODS {
        return uc_oracle(spec).ok();
    }
    let periods = spec.periods();
    let all = |v: u8| vec![vec![v; periods]; spec.generators.len()];
    evaluate_commitment(spec, &all(1)).or_else(|| evaluate_commitment(spec, &all(0)))
}

/// Cheapest schedule by enumerating every commitment pattern (at most
/// [`UC_ORACLE_MAX_GENERATORS`] units and [`UC_ORACLE_MAX_PERIODS`]
/// periods), each dispatched in merit order.
///
/// Segments are independent in the dispatch LP, so filling demand with the
/// cheapest committed segments first is optimal for a fixed commitment.
pub fn uc_oracle(spec: &UcSpec) -> Result<UcSchedule> {
    spec.validate()?;
    let (g, periods) = (spec.generators.len(), spec.periods());
    if g > UC_ORACLE_MAX_GENERATORS || periods > UC_ORACLE_MAX_PERIODS {
        return Err(Error::SizeExceeded {
            size: g * periods,
            limit: UC_ORACLE_MAX_GENERATORS * UC_ORACLE_MAX_PERIODS,
        });
    }
    let mut best: Option<UcSchedule> = None;
    for mask in 0u32..1 << (g * periods) {
        let commitment: Vec<Vec<u8>> = (0..g)
            .map(|k| (0..periods).map(|t| (mask >> (k * periods + t) & 1) as u8).collect())
            .collect();
        if let Some(s) = evaluate_commitment(spec, &commitment) {
            if best.as_ref().is_none_or(|b| s.cost < b.cost) {
                best = Some(s);
            }
        }
    }
    best.ok_or_else(|| Error::InfeasibleSpec("no commitment pattern meets demand".into()))
}
