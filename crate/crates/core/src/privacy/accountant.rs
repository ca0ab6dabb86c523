use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::composition::{advanced_homogeneous, filter_check, renyi_to_ed, FilterDecision};
use super::{renyi_order, unit_delta, Cost, PrivacyError};
use crate::json::number_json;
use crate::model::SourceId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OdometerKind {
    /// Sequential composition of pure ε costs.
    Pure,
    /// Sequential composition of (ε, δ) costs. With a global δ the reported ε
    /// becomes ∞ once the summed δ exceeds it.
    Approx { delta_global: Option<f64> },
    /// Advanced composition of identical (ε, δ) costs.
    Advanced { delta_slack: f64 },
    /// Rényi composition at a fixed order.
    Renyi { alpha: f64 },
}

/// Per-source total as reported by an odometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReportedCost {
    Eps(f64),
    EpsDelta(f64, f64),
    Renyi { alpha: f64, eps: f64 },
}

impl ReportedCost {
    fn json(&self) -> serde_json::Value {
        let num = |x: f64| {
            if x.is_infinite() {
                serde_json::Value::from("inf")
            } else {
                serde_json::Value::from(x)
            }
        };
        match *self {
            ReportedCost::Eps(e) | ReportedCost::Renyi { eps: e, .. } => num(e),
            ReportedCost::EpsDelta(e, d) => serde_json::Value::Array(vec![num(e), num(d)]),
        }
    }
}

impl fmt::Display for ReportedCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportedCost::Eps(e) => write!(f, "{e:?}"),
            ReportedCost::EpsDelta(e, d) => write!(f, "({e:?}, {d:?})"),
            ReportedCost::Renyi { alpha, eps } => write!(f, "({alpha:?}, {eps:?})"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Tally {
    eps: f64,
    delta: f64,
    calls: u64,
    unit: Option<(f64, f64)>,
}

/// Running total of the privacy cost charged to each source.
#[derive(Clone, Debug, PartialEq)]
pub struct Odometer {
    kind: OdometerKind,
    tallies: BTreeMap<SourceId, Tally>,
}

/// JSON form of an odometer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdometerExport {
    pub regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_global: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_slack: Option<f64>,
    pub costs: BTreeMap<String, serde_json::Value>,
}

impl Odometer {
    pub fn new(kind: OdometerKind) -> Result<Odometer, PrivacyError> {
        match kind {
            OdometerKind::Pure | OdometerKind::Approx { delta_global: None } => {}
            OdometerKind::Approx { delta_global: Some(d) } => {
                if !(0.0..1.0).contains(&d) {
                    return Err(PrivacyError::DeltaOutOfRange(d));
                }
            }
            OdometerKind::Advanced { delta_slack } => {
                unit_delta(delta_slack)?;
            }
            OdometerKind::Renyi { alpha } => {
                renyi_order(alpha)?;
            }
        }
        Ok(Odometer {
            kind,
            tallies: BTreeMap::new(),
        })
    }

    pub fn kind(&self) -> OdometerKind {
        self.kind
    }

    fn name(&self) -> &'static str {
        match self.kind {
            OdometerKind::Pure => "pure odometer",
            OdometerKind::Approx { .. } => "(ε,δ) odometer",
            OdometerKind::Advanced { .. } => "advanced-composition odometer",
            OdometerKind::Renyi { .. } => "Rényi odometer",
        }
    }

    /// The per-call (ε, δ) this odometer records for `cost`.
    fn accept(&self, cost: Cost) -> Result<(f64, f64), PrivacyError> {
        let mismatch = || PrivacyError::RegimeMismatch {
            accountant: self.name(),
            cost: cost.regime(),
        };
        match (self.kind, cost) {
            (OdometerKind::Renyi { alpha }, Cost::Renyi { alpha: a, eps }) => {
                if a == alpha {
                    Ok((eps, 0.0))
                } else {
                    Err(PrivacyError::AlphaMismatch { expected: alpha, got: a })
                }
            }
            (OdometerKind::Renyi { .. }, _) | (_, Cost::Renyi { .. }) => Err(mismatch()),
            (OdometerKind::Pure, c) => match c.as_ed() {
                Some((eps, 0.0)) => Ok((eps, 0.0)),
                _ => Err(mismatch()),
            },
            (_, c) => Ok(c.as_ed().expect("non-Rényi costs are (ε, δ) pairs")),
        }
    }

    fn record(&mut self, cost: Cost, sources: &[SourceId]) -> Result<(), PrivacyError> {
        let unit = self.accept(cost)?;
        if let OdometerKind::Advanced { .. } = self.kind {
            for s in sources {
                if let Some(t) = self.tallies.get(s) {
                    if t.unit != Some(unit) {
                        return Err(PrivacyError::HeterogeneousCosts);
                    }
                }
            }
        }
        for s in sources {
            let t = self.tallies.entry(s.clone()).or_default();
            t.eps += unit.0;
            t.delta += unit.1;
            t.calls += 1;
            t.unit.get_or_insert(unit);
        }
        Ok(())
    }

    fn report(&self, t: &Tally) -> ReportedCost {
        match self.kind {
            OdometerKind::Pure => ReportedCost::Eps(t.eps),
            OdometerKind::Approx { delta_global: None } => ReportedCost::EpsDelta(t.eps, t.delta),
            OdometerKind::Approx { delta_global: Some(g) } => {
                let eps = if t.delta > g { f64::INFINITY } else { t.eps };
                ReportedCost::EpsDelta(eps, t.delta)
            }
            OdometerKind::Advanced { delta_slack } => {
                let (e, d) = t.unit.unwrap_or((0.0, 0.0));
                let (eps, delta) = advanced_homogeneous(t.calls as f64, e, d, delta_slack);
                ReportedCost::EpsDelta(eps, delta)
            }
            OdometerKind::Renyi { alpha } => ReportedCost::Renyi { alpha, eps: t.eps },
        }
    }

    /// Total charged to `source`, `None` if it was never charged.
    pub fn cost(&self, source: &SourceId) -> Option<ReportedCost> {
        self.tallies.get(source).map(|t| self.report(t))
    }

    pub fn costs(&self) -> BTreeMap<SourceId, ReportedCost> {
        self.tallies.iter().map(|(s, t)| (s.clone(), self.report(t))).collect()
    }

    /// Number of charges recorded against `source`.
    pub fn calls(&self, source: &SourceId) -> u64 {
        self.tallies.get(source).map_or(0, |t| t.calls)
    }

    pub fn export(&self) -> OdometerExport {
        let (regime, alpha, delta_global, delta_slack) = match self.kind {
            OdometerKind::Pure => ("pure", None, None, None),
            OdometerKind::Approx { delta_global } => ("approx", None, delta_global, None),
            OdometerKind::Advanced { delta_slack } => ("advanced", None, None, Some(delta_slack)),
            OdometerKind::Renyi { alpha } => ("renyi", Some(number_json(alpha)), None, None),
        };
        OdometerExport {
            regime,
            alpha,
            delta_global,
            delta_slack,
            costs: self
                .costs()
                .into_iter()
                .map(|(s, c)| (s.to_string(), c.json()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("odometer exports always serialize")
    }
}

impl fmt::Display for Odometer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            OdometerKind::Pure => "ε",
            OdometerKind::Approx { .. } | OdometerKind::Advanced { .. } => "(ε,δ)",
            OdometerKind::Renyi { .. } => "(α,ε)",
        };
        write!(f, "Odometer_{label}({{")?;
        for (i, (s, c)) in self.costs().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s} ↦ {c}")?;
        }
        f.write_str("})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterKind {
    /// (ε, δ) budget under sequential composition; δ = 0 gives a pure filter.
    Approx { eps: f64, delta: f64 },
    /// Rényi budget at a fixed order.
    Renyi { alpha: f64, eps: f64 },
}

/// Budget enforcer: refuses any charge that would take a source over
/// budget. Once it has refused a charge it refuses every later one.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    kind: FilterKind,
    spent: BTreeMap<SourceId, (f64, f64)>,
    halted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterExport {
    pub regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<serde_json::Value>,
    pub budget: serde_json::Value,
    pub halted: bool,
    pub spent: BTreeMap<String, serde_json::Value>,
}

impl Filter {
    pub fn new(kind: FilterKind) -> Result<Filter, PrivacyError> {
        let budget_ok = |x: f64| x >= 0.0 && x.is_finite();
        match kind {
            FilterKind::Approx { eps, delta } => {
                if !budget_ok(eps) {
                    return Err(PrivacyError::InvalidParameter { name: "epsilon budget", value: eps });
                }
                if !(0.0..1.0).contains(&delta) {
                    return Err(PrivacyError::DeltaOutOfRange(delta));
                }
            }
            FilterKind::Renyi { alpha, eps } => {
                renyi_order(alpha)?;
                if !budget_ok(eps) {
                    return Err(PrivacyError::InvalidParameter { name: "epsilon budget", value: eps });
                }
            }
        }
        Ok(Filter {
            kind,
            spent: BTreeMap::new(),
            halted: false,
        })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Amount spent by `source`: (ε, δ), or (ε, 0) for a Rényi filter.
    pub fn spent(&self, source: &SourceId) -> (f64, f64) {
        self.spent.get(source).copied().unwrap_or((0.0, 0.0))
    }

    fn budget(&self) -> (f64, f64) {
        match self.kind {
            FilterKind::Approx { eps, delta } => (eps, delta),
            FilterKind::Renyi { eps, .. } => (eps, 0.0),
        }
    }

    fn accept(&self, cost: Cost) -> Result<(f64, f64), PrivacyError> {
        match (self.kind, cost) {
            (FilterKind::Renyi { alpha, .. }, Cost::Renyi { alpha: a, eps }) => {
                if a == alpha {
                    Ok((eps, 0.0))
                } else {
                    Err(PrivacyError::AlphaMismatch { expected: alpha, got: a })
                }
            }
            (FilterKind::Approx { .. }, c) if c.as_ed().is_some() => Ok(c.as_ed().expect("checked")),
            (kind, c) => Err(PrivacyError::RegimeMismatch {
                accountant: match kind {
                    FilterKind::Approx { .. } => "(ε,δ) filter",
                    FilterKind::Renyi { .. } => "Rényi filter",
                },
                cost: c.regime(),
            }),
        }
    }

    /// The decision for charging `cost` to every source in `sources`.
    pub fn check(&self, cost: Cost, sources: &[SourceId]) -> Result<FilterDecision, PrivacyError> {
        let proposed = self.accept(cost)?;
        if self.halted {
            return Ok(FilterDecision::Halt);
        }
        let budget = self.budget();
        let halts = sources
            .iter()
            .any(|s| filter_check(self.spent(s), proposed, budget) == FilterDecision::Halt);
        Ok(if halts { FilterDecision::Halt } else { FilterDecision::Continue })
    }

    /// `settling` marks the conversion charge at the end of a Rényi block,
    /// which was validated while the block ran and so ignores a later halt.
    fn record(&mut self, cost: Cost, sources: &[SourceId], settling: bool) -> Result<(), PrivacyError> {
        let was_halted = self.halted;
        self.halted = was_halted && !settling;
        let decision = self.check(cost, sources);
        self.halted = was_halted;
        if decision? == FilterDecision::Halt {
            let reason = if self.halted {
                "filter already halted".to_owned()
            } else {
                format!("charging {cost} would exceed the budget {:?}", self.budget())
            };
            return Err(PrivacyError::FilterHalt { reason });
        }
        let (eps, delta) = self.accept(cost)?;
        for s in sources {
            let t = self.spent.entry(s.clone()).or_insert((0.0, 0.0));
            t.0 += eps;
            t.1 += delta;
        }
        Ok(())
    }

    pub fn export(&self) -> FilterExport {
        let (regime, alpha, budget) = match self.kind {
            FilterKind::Approx { eps, delta } => ("approx", None, serde_json::json!([eps, delta])),
            FilterKind::Renyi { alpha, eps } => ("renyi", Some(number_json(alpha)), serde_json::json!(eps)),
        };
        let spent = self
            .spent
            .iter()
            .map(|(s, (e, d))| {
                let v = match self.kind {
                    FilterKind::Approx { .. } => serde_json::json!([e, d]),
                    FilterKind::Renyi { .. } => serde_json::json!(e),
                };
                (s.to_string(), v)
            })
            .collect();
        FilterExport {
            regime,
            alpha,
            budget,
            halted: self.halted,
            spent,
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FilterKind::Approx { eps, delta } => write!(f, "Filter_(ε,δ)[{eps:?}, {delta:?}]({{")?,
            FilterKind::Renyi { alpha, eps } => write!(f, "Filter_(α,ε)[{alpha:?}, {eps:?}]({{")?,
        }
        for (i, (s, (e, d))) in self.spent.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match self.kind {
                FilterKind::Approx { .. } => write!(f, "{s} ↦ ({e:?}, {d:?})")?,
                FilterKind::Renyi { .. } => write!(f, "{s} ↦ {e:?}")?,
            }
        }
        f.write_str("})")?;
        if self.halted {
            f.write_str(" HALTED")?;
        }
        Ok(())
    }
}

/// Collects Rényi costs and converts them to (ε, δ) when the block ends.
#[derive(Clone, Debug)]
struct RenyiBlock {
    delta: f64,
    alpha: Option<f64>,
    totals: BTreeMap<SourceId, f64>,
}

impl RenyiBlock {
    fn absorb(&mut self, alpha: f64, eps: f64, sources: &[SourceId]) -> Result<(), PrivacyError> {
        match self.alpha {
            Some(a) if a != alpha => return Err(PrivacyError::AlphaMismatch { expected: a, got: alpha }),
            _ => self.alpha = Some(alpha),
        }
        for s in sources {
            *self.totals.entry(s.clone()).or_insert(0.0) += eps;
        }
        Ok(())
    }

    fn converted(&self) -> BTreeMap<SourceId, (f64, f64)> {
        let Some(alpha) = self.alpha else {
            return BTreeMap::new();
        };
        self.totals
            .iter()
            .map(|(s, eps)| {
                let ed = renyi_to_ed(alpha, *eps, self.delta).expect("block parameters were validated");
                (s.clone(), ed)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Layer {
    Odometer(Odometer),
    Filter(Filter),
    Block(RenyiBlock),
}

#[derive(Clone, Debug)]
struct Slot {
    id: u64,
    layer: Layer,
}

/// Names an odometer or filter pushed onto an [`AccountantScope`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerHandle(u64);

/// Per-source (ε, δ) costs.
pub type EdCosts = BTreeMap<SourceId, (f64, f64)>;

/// Random stream plus the stack of active accountants.
#[derive(Debug)]
pub struct AccountantScope {
    rng: ChaCha8Rng,
    slots: Vec<Slot>,
    next_id: u64,
}

fn charge_down(
    slots: &mut [Slot],
    cost: Cost,
    sources: &[SourceId],
    settling: bool,
) -> Result<(), (usize, PrivacyError)> {
    for i in (0..slots.len()).rev() {
        match &mut slots[i].layer {
            Layer::Odometer(o) => o.record(cost, sources).map_err(|e| (i, e))?,
            Layer::Filter(f) => f.record(cost, sources, settling).map_err(|e| (i, e))?,
            Layer::Block(b) => {
                if let Cost::Renyi { alpha, eps } = cost {
                    return b.absorb(alpha, eps, sources).map_err(|e| (i, e));
                }
            }
        }
    }
    Ok(())
}

/// Charges every block's converted total to the layers beneath it, as if all
/// blocks ended now.
fn flush_blocks(slots: &mut [Slot]) -> Result<(), (usize, PrivacyError)> {
    for i in (0..slots.len()).rev() {
        let converted = match &slots[i].layer {
            Layer::Block(b) => b.converted(),
            _ => continue,
        };
        for (s, (eps, delta)) in converted {
            charge_down(&mut slots[..i], Cost::Approx { eps, delta }, &[s], true)?;
        }
    }
    Ok(())
}

fn check_cost(cost: Cost) -> Result<(), PrivacyError> {
    let eps_ok = |e: f64| {
        if e >= 0.0 && e.is_finite() {
            Ok(())
        } else {
            Err(PrivacyError::InvalidParameter { name: "epsilon", value: e })
        }
    };
    match cost {
        Cost::Pure(e) => eps_ok(e),
        Cost::Approx { eps, delta } => {
            eps_ok(eps)?;
            if (0.0..1.0).contains(&delta) {
                Ok(())
            } else {
                Err(PrivacyError::DeltaOutOfRange(delta))
            }
        }
        Cost::Renyi { alpha, eps } => {
            renyi_order(alpha)?;
            eps_ok(eps)
        }
    }
}

impl AccountantScope {
    pub fn new(seed: u64) -> AccountantScope {
        AccountantScope {
            rng: ChaCha8Rng::seed_from_u64(seed),
            slots: Vec::new(),
            next_id: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn push(&mut self, layer: Layer) -> LayerHandle {
        let id = self.next_id;
        self.next_id += 1;
        self.slots.push(Slot { id, layer });
        LayerHandle(id)
    }

    fn position(&self, handle: LayerHandle) -> Option<usize> {
        self.slots.iter().position(|s| s.id == handle.0)
    }

    pub fn push_odometer(&mut self, kind: OdometerKind) -> Result<LayerHandle, PrivacyError> {
        Ok(self.push(Layer::Odometer(Odometer::new(kind)?)))
    }

    pub fn push_filter(&mut self, kind: FilterKind) -> Result<LayerHandle, PrivacyError> {
        Ok(self.push(Layer::Filter(Filter::new(kind)?)))
    }

    pub fn odometer(&self, handle: LayerHandle) -> Option<&Odometer> {
        match &self.slots[self.position(handle)?].layer {
            Layer::Odometer(o) => Some(o),
            _ => None,
        }
    }

    pub fn filter(&self, handle: LayerHandle) -> Option<&Filter> {
        match &self.slots[self.position(handle)?].layer {
            Layer::Filter(f) => Some(f),
            _ => None,
        }
    }

    /// Deactivates an odometer and returns its final state.
    pub fn pop_odometer(&mut self, handle: LayerHandle) -> Result<Odometer, PrivacyError> {
        match self.position(handle).map(|i| (i, &self.slots[i].layer)) {
            Some((i, Layer::Odometer(_))) => match self.slots.remove(i).layer {
                Layer::Odometer(o) => Ok(o),
                _ => unreachable!(),
            },
            _ => Err(PrivacyError::ScopeMismatch("odometer")),
        }
    }

    /// Deactivates a filter and returns its final state.
    pub fn pop_filter(&mut self, handle: LayerHandle) -> Result<Filter, PrivacyError> {
        match self.position(handle).map(|i| (i, &self.slots[i].layer)) {
            Some((i, Layer::Filter(_))) => match self.slots.remove(i).layer {
                Layer::Filter(f) => Ok(f),
                _ => unreachable!(),
            },
            _ => Err(PrivacyError::ScopeMismatch("filter")),
        }
    }

    /// Runs `f` with an extra odometer active.
    pub fn with_odometer<R>(
        &mut self,
        kind: OdometerKind,
        f: impl FnOnce(&mut AccountantScope) -> R,
    ) -> Result<(R, Odometer), PrivacyError> {
        let h = self.push_odometer(kind)?;
        let r = f(self);
        Ok((r, self.pop_odometer(h)?))
    }

    /// Runs `f` with an extra filter active.
    pub fn with_filter<R>(
        &mut self,
        kind: FilterKind,
        f: impl FnOnce(&mut AccountantScope) -> R,
    ) -> Result<(R, Filter), PrivacyError> {
        let h = self.push_filter(kind)?;
        let r = f(self);
        Ok((r, self.pop_filter(h)?))
    }

    /// Runs `f` in Rényi mode. Rényi costs charged inside are collected per
    /// source and, when `f` returns, converted at `delta` and charged to the
    /// enclosing accountants as (ε, δ) costs. Filters outside the block see
    /// the converted cost of every charge made inside it before it happens.
    pub fn renyi_block<R>(
        &mut self,
        delta: f64,
        f: impl FnOnce(&mut AccountantScope) -> R,
    ) -> Result<(R, EdCosts), PrivacyError> {
        unit_delta(delta)?;
        let h = self.push(Layer::Block(RenyiBlock {
            delta,
            alpha: None,
            totals: BTreeMap::new(),
        }));
        let r = f(self);
        let i = self.position(h).expect("blocks are only removed here");
        let block = match self.slots.remove(i).layer {
            Layer::Block(b) => b,
            _ => unreachable!(),
        };
        self.slots.truncate(i);
        let converted = block.converted();
        for (s, (eps, delta)) in &converted {
            let cost = Cost::Approx { eps: *eps, delta: *delta };
            self.charge_with(cost, std::slice::from_ref(s), true)?;
        }
        Ok((r, converted))
    }

    /// Charges `cost` to every source in `sources` on every active
    /// accountant, innermost first. Nothing is recorded unless every
    /// accountant accepts.
    pub fn charge(&mut self, cost: Cost, sources: &[SourceId]) -> Result<(), PrivacyError> {
        self.charge_with(cost, sources, false)
    }

    fn charge_with(&mut self, cost: Cost, sources: &[SourceId], settling: bool) -> Result<(), PrivacyError> {
        check_cost(cost)?;
        if sources.is_empty() {
            return Ok(());
        }
        // Every charge reaches every layer, directly or through a block's
        // conversion, so one halted filter refuses all new charges.
        let halted = self.slots.iter().any(|s| matches!(&s.layer, Layer::Filter(f) if f.halted));
        if halted && !settling {
            return Err(PrivacyError::FilterHalt {
                reason: "filter already halted".to_owned(),
            });
        }
        let mut trial = self.slots.clone();
        let outcome = charge_down(&mut trial, cost, sources, settling).and_then(|()| flush_blocks(&mut trial));
        if let Err((i, e)) = outcome {
            if let (PrivacyError::FilterHalt { .. }, Layer::Filter(f)) = (&e, &mut self.slots[i].layer) {
                f.halted = true;
            }
            return Err(e);
        }
        charge_down(&mut self.slots, cost, sources, settling).map_err(|(_, e)| e)
    }
}
