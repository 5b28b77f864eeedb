//! Campaign state as a fold over its event log. Commands inspect the current
//! state and produce an event; `CampaignState::apply` is the only place state
//! changes, so replaying a log always rebuilds the same state.

use crate::error::{ApiError, ApiResult};
use infplan_core::caims::compute_alternates;
use infplan_core::dime::{DimeAction, DimeObservation, ParticleBelief, PlanContext, RevealedEdge};
use infplan_core::harness::bench::make_dime_planner;
use infplan_core::harness::PlannerSpec;
use infplan_core::influence::{CachedSpread, SpreadSampler};
use infplan_core::netcore::UncertainNetwork;
use infplan_core::rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Worlds sampled for the spread oracle behind alternate ranking.
const ALTERNATE_NSIM: usize = 200;

/// What happens to a slot whose invitee declines or does not show up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencyMode {
    /// Invite the slot's next alternate.
    #[default]
    Alternates,
    /// Leave the slot open; the next recommendation request replans it.
    Replan,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn half() -> f64 {
    0.5
}
fn particles() -> usize {
    64
}

/// Everything fixed at creation except the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSettings {
    #[serde(default)]
    pub name: Option<String>,
    pub planner: PlannerSpec,
    /// Invitations per round.
    pub k: usize,
    /// Number of rounds.
    pub t: usize,
    /// Diffusion steps per round.
    #[serde(default = "one")]
    pub l: usize,
    #[serde(default)]
    pub mode: ContingencyMode,
    /// Alternates computed per invitee.
    #[serde(default = "three")]
    pub alternates: usize,
    /// Assumed probability that an invitee shows up, used to rank alternates.
    #[serde(default = "half")]
    pub attendance: f64,
    /// Particles in the influenced-set belief.
    #[serde(default = "particles")]
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Body of a create request: a network document plus settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub network: serde_json::Value,
    #[serde(default)]
    pub name: Option<String>,
    pub planner: PlannerSpec,
    pub k: usize,
    pub t: usize,
    #[serde(default = "one")]
    pub l: usize,
    #[serde(default)]
    pub mode: ContingencyMode,
    #[serde(default = "three")]
    pub alternates: usize,
    #[serde(default = "half")]
    pub attendance: f64,
    #[serde(default = "particles")]
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CreateRequest {
    pub fn into_event(self) -> Event {
        let settings = CampaignSettings {
            name: self.name,
            planner: self.planner,
            k: self.k,
            t: self.t,
            l: self.l,
            mode: self.mode,
            alternates: self.alternates,
            attendance: self.attendance,
            particles: self.particles,
            seed: self.seed,
        };
        Event::Created { network: self.network, settings }
    }
}

/// What officials report after inviting the current invitees.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    #[serde(default)]
    pub accepted: Vec<usize>,
    #[serde(default)]
    pub declined: Vec<usize>,
    #[serde(default)]
    pub absent: Vec<usize>,
    /// Friendships confirmed or ruled out.
    #[serde(default)]
    pub edges: Vec<RevealedEdge>,
    /// Previously unavailable nodes that may be recommended again.
    #[serde(default)]
    pub reenabled: Vec<usize>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
            && self.declined.is_empty()
            && self.absent.is_empty()
            && self.edges.is_empty()
            && self.reenabled.is_empty()
    }

    fn failed(&self) -> impl Iterator<Item = usize> + '_ {
        self.declined.iter().chain(&self.absent).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub slot: usize,
    pub node: usize,
    pub alternates: Vec<usize>,
}

/// A failed invitee replaced by the slot's next usable alternate, or by
/// nobody once the list is used up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub slot: usize,
    pub from: usize,
    pub to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        network: serde_json::Value,
        settings: CampaignSettings,
    },
    /// Planner output for `slots` slots of the round. A replan fills open
    /// slots only; `slots` then repeats the existing count.
    Recommended {
        round: usize,
        slots: usize,
        assignments: Vec<Assignment>,
    },
    Observed {
        round: usize,
        report: Report,
        substitutions: Vec<Substitution>,
    },
    Advanced {
        round: usize,
        action: Vec<usize>,
    },
}

/// One line of the event file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seq: usize,
    /// Unix time in milliseconds.
    pub ts: u64,
    pub event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotStatus {
    /// Invitee awaiting a report.
    Pending,
    Accepted,
    /// Invitee failed; waiting for a replan.
    Open,
    /// No usable alternate left.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slot {
    pub slot: usize,
    pub status: SlotStatus,
    pub invitee: Option<usize>,
    pub alternates: Vec<usize>,
    /// Alternates before this index have been consumed.
    pub next_alternate: usize,
    /// Everyone invited for this slot, in order.
    pub invited: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundPlan {
    pub round: usize,
    pub slots: Vec<Slot>,
}

impl RoundPlan {
    /// Current invitees, pending or accepted.
    pub fn nodes(&self) -> Vec<usize> {
        self.slots.iter().filter_map(|s| s.invitee).collect()
    }

    pub fn needs_replan(&self) -> bool {
        self.slots.iter().any(|s| s.status == SlotStatus::Open)
    }

    fn invited(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().flat_map(|s| s.invited.iter().copied())
    }

    fn proposed(&self) -> impl Iterator<Item = usize> + '_ {
        self.invited().chain(self.slots.iter().flat_map(|s| s.alternates.iter().copied()))
    }

    fn accepted(&self) -> Vec<usize> {
        let mut a: Vec<usize> =
            self.slots.iter().filter(|s| s.status == SlotStatus::Accepted).filter_map(|s| s.invitee).collect();
        a.sort_unstable();
        a
    }
}

#[derive(Debug, Clone)]
pub struct CampaignState {
    pub id: String,
    pub settings: CampaignSettings,
    pub network: UncertainNetwork,
    pub belief: ParticleBelief,
    /// Rounds completed.
    pub round: usize,
    /// Nodes that accepted, in acceptance order.
    pub chosen: Vec<usize>,
    pub unavailable: BTreeSet<usize>,
    pub plan: Option<RoundPlan>,
    /// Events applied so far.
    pub version: usize,
}

/// Client-facing summary of a campaign.
#[derive(Debug, Serialize)]
pub struct CampaignView<'a> {
    pub id: &'a str,
    pub settings: &'a CampaignSettings,
    pub nodes: usize,
    pub uncertain_edges: usize,
    pub round: usize,
    pub finished: bool,
    pub chosen: &'a [usize],
    pub unavailable: &'a BTreeSet<usize>,
    pub recommendation: Option<&'a RoundPlan>,
    pub expected_influenced: f64,
    pub version: usize,
}

#[derive(Serialize)]
struct Fingerprint<'a> {
    view: CampaignView<'a>,
    network: serde_json::Value,
    particles: Vec<String>,
}

impl CampaignState {
    /// State after the creation event, validating the request.
    pub fn create(id: &str, event: &Event) -> ApiResult<Self> {
        let Event::Created { network, settings } = event else {
            return Err(ApiError::Internal("event log must start with a creation event".into()));
        };
        let net = UncertainNetwork::from_json_str(&network.to_string()).map_err(ApiError::validation)?;
        let s = settings;
        if s.k == 0 || s.k > net.n() {
            return Err(ApiError::Validation(format!("k must lie in 1..={}", net.n())));
        }
        if s.t == 0 {
            return Err(ApiError::Validation("t must be positive".into()));
        }
        if s.l == 0 {
            return Err(ApiError::Validation("l must be positive".into()));
        }
        if s.particles == 0 {
            return Err(ApiError::Validation("particles must be positive".into()));
        }
        if !(s.attendance > 0.0 && s.attendance <= 1.0) {
            return Err(ApiError::Validation("attendance must lie in (0,1]".into()));
        }
        make_dime_planner(&s.planner).map_err(ApiError::validation)?;
        Ok(Self {
            id: id.to_string(),
            settings: s.clone(),
            belief: ParticleBelief::initial(net.n(), s.particles),
            network: net,
            round: 0,
            chosen: Vec::new(),
            unavailable: BTreeSet::new(),
            plan: None,
            version: 1,
        })
    }

    /// Rebuilds a campaign from its full log.
    pub fn replay(id: &str, records: &[Record]) -> ApiResult<Self> {
        let first = records.first().ok_or_else(|| ApiError::Internal("empty event log".into()))?;
        let mut state = Self::create(id, &first.event)?;
        for r in &records[1..] {
            state.apply(&r.event)?;
        }
        Ok(state)
    }

    pub fn finished(&self) -> bool {
        self.round >= self.settings.t
    }

    pub fn view(&self) -> CampaignView<'_> {
        CampaignView {
            id: &self.id,
            settings: &self.settings,
            nodes: self.network.n(),
            uncertain_edges: self.network.m(),
            round: self.round,
            finished: self.finished(),
            chosen: &self.chosen,
            unavailable: &self.unavailable,
            recommendation: self.plan.as_ref(),
            expected_influenced: self.belief.marginals().iter().sum(),
            version: self.version,
        }
    }

    /// Serialization of the whole state, belief particles included.
    pub fn fingerprint(&self) -> String {
        let particles = self
            .belief
            .particles
            .iter()
            .map(|p| p.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        let network = serde_json::from_str(&self.network.to_json_string()).expect("network document is json");
        serde_json::to_string(&Fingerprint { view: self.view(), network, particles }).expect("state serializes")
    }

    fn round_plan(&self) -> ApiResult<&RoundPlan> {
        if self.finished() {
            return Err(ApiError::Conflict("campaign is finished".into()));
        }
        self.plan.as_ref().ok_or_else(|| ApiError::Conflict("no recommendation for the current round".into()))
    }

    /// Nodes a new invitation must avoid.
    fn blocked(&self) -> BTreeSet<usize> {
        let mut b: BTreeSet<usize> = self.chosen.iter().chain(&self.unavailable).copied().collect();
        if let Some(p) = &self.plan {
            b.extend(p.invited());
        }
        b
    }

    /// Whether a recommendation request has to run the planner.
    pub fn needs_planning(&self) -> ApiResult<bool> {
        if self.finished() {
            return Err(ApiError::Conflict("campaign is finished".into()));
        }
        Ok(self.plan.as_ref().is_none_or(RoundPlan::needs_replan))
    }

    /// Plans the round, or the open slots of a replanned round. Returns
    /// `None` when the current recommendation still stands.
    pub fn recommend(&self) -> ApiResult<Option<Event>> {
        if !self.needs_planning()? {
            return Ok(None);
        }
        let s = &self.settings;
        let open: Vec<usize> = match &self.plan {
            None => (0..s.k).collect(),
            Some(p) => p.slots.iter().filter(|x| x.status == SlotStatus::Open).map(|x| x.slot).collect(),
        };
        let slots = self.plan.as_ref().map_or(s.k, |p| p.slots.len());
        let n = self.network.n();
        let blocked = self.blocked();
        let fill = open.len().min(n - blocked.len());
        let seed = rng::derive(rng::derive(s.seed, self.round as u64), self.version as u64);
        let mut nodes = Vec::new();
        if fill > 0 {
            let excluded: Vec<bool> = (0..n).map(|v| blocked.contains(&v)).collect();
            let ctx = PlanContext {
                network: &self.network,
                belief: &self.belief,
                k: fill,
                round: self.round,
                rounds_total: s.t,
                steps: s.l,
                chosen: &self.chosen,
                excluded: &excluded,
            };
            let mut planner = make_dime_planner(&s.planner).map_err(ApiError::validation)?;
            nodes = planner.plan(&ctx, rng::derive(seed, 0)).map_err(|e| ApiError::Internal(e.to_string()))?.nodes;
            if nodes.len() != fill || nodes.iter().any(|v| blocked.contains(v)) {
                return Err(ApiError::Internal(format!("planner proposed an ineligible action {nodes:?}")));
            }
        }
        let alternates = if nodes.is_empty() || s.alternates == 0 {
            vec![Vec::new(); nodes.len()]
        } else {
            let sampler = SpreadSampler::new(&self.network, s.l, ALTERNATE_NSIM, rng::derive(seed, 1))
                .map_err(|e| ApiError::Internal(e.to_string()))?;
            let oracle = CachedSpread::new(sampler);
            let q = vec![s.attendance; n];
            let excluded: Vec<usize> = blocked.iter().copied().collect();
            let wide = s.alternates * nodes.len();
            let ranked: Vec<Vec<usize>> =
                compute_alternates(&oracle, n, &nodes, &q, wide, &excluded, rng::derive(seed, 2))
                    .into_iter()
                    .map(|(_, alts)| alts)
                    .collect();
            disjoint_alternates(&ranked, s.alternates)
        };
        let assignments = open
            .iter()
            .zip(nodes.into_iter().zip(alternates))
            .map(|(&slot, (node, alternates))| Assignment { slot, node, alternates })
            .collect();
        Ok(Some(Event::Recommended { round: self.round, slots, assignments }))
    }

    /// Validates a report and turns it into an event; an empty report
    /// changes nothing.
    pub fn observe(&self, report: Report) -> ApiResult<Option<Event>> {
        let plan = self.round_plan()?;
        if report.is_empty() {
            return Ok(None);
        }
        let known: BTreeSet<usize> = plan.proposed().collect();
        let mut seen = BTreeSet::new();
        for v in report.accepted.iter().chain(&report.declined).chain(&report.absent).copied() {
            if !known.contains(&v) {
                return Err(ApiError::Validation(format!("node {v} is not part of the current recommendation")));
            }
            if !seen.insert(v) {
                return Err(ApiError::Validation(format!("node {v} is reported twice")));
            }
            let pending = plan.slots.iter().any(|s| s.status == SlotStatus::Pending && s.invitee == Some(v));
            if !pending {
                return Err(ApiError::Validation(format!("node {v} is not awaiting a response")));
            }
        }
        for &v in &report.reenabled {
            if !self.unavailable.contains(&v) {
                return Err(ApiError::Validation(format!("node {v} is not unavailable")));
            }
        }
        self.network
            .refine(&DimeObservation { revealed: report.edges.clone() }.as_map())
            .map_err(ApiError::validation)?;

        let mut substitutions = Vec::new();
        if self.settings.mode == ContingencyMode::Alternates {
            let mut blocked = self.blocked();
            for v in report.failed() {
                blocked.insert(v);
            }
            for &v in &report.reenabled {
                if !plan.invited().any(|u| u == v) {
                    blocked.remove(&v);
                }
            }
            let mut failed: Vec<(usize, usize)> = report
                .failed()
                .map(|v| (plan.slots.iter().position(|s| s.invitee == Some(v)).expect("pending invitee"), v))
                .collect();
            failed.sort_unstable();
            for (slot, from) in failed {
                let s = &plan.slots[slot];
                let to = s.alternates[s.next_alternate..].iter().copied().find(|a| !blocked.contains(a));
                if let Some(a) = to {
                    blocked.insert(a);
                }
                substitutions.push(Substitution { slot, from, to });
            }
        }
        Ok(Some(Event::Observed { round: self.round, report, substitutions }))
    }

    /// Closes the round with whoever accepted.
    pub fn advance(&self) -> ApiResult<Event> {
        let plan = self.round_plan()?;
        Ok(Event::Advanced { round: self.round, action: plan.accepted() })
    }

    pub fn apply(&mut self, event: &Event) -> ApiResult<()> {
        let stale = |round: usize, now: usize| {
            if round == now {
                Ok(())
            } else {
                Err(ApiError::Internal(format!("event for round {round} applied in round {now}")))
            }
        };
        match event {
            Event::Created { .. } => return Err(ApiError::Internal("duplicate creation event".into())),
            Event::Recommended { round, slots, assignments } => {
                stale(*round, self.round)?;
                let plan = self.plan.get_or_insert_with(|| RoundPlan {
                    round: *round,
                    slots: (0..*slots)
                        .map(|slot| Slot {
                            slot,
                            status: SlotStatus::Open,
                            invitee: None,
                            alternates: Vec::new(),
                            next_alternate: 0,
                            invited: Vec::new(),
                        })
                        .collect(),
                });
                for a in assignments {
                    let s = plan
                        .slots
                        .get_mut(a.slot)
                        .ok_or_else(|| ApiError::Internal(format!("slot {} out of range", a.slot)))?;
                    s.status = SlotStatus::Pending;
                    s.invitee = Some(a.node);
                    s.alternates = a.alternates.clone();
                    s.next_alternate = 0;
                    s.invited.push(a.node);
                }
                for s in &mut plan.slots {
                    if s.status == SlotStatus::Open {
                        s.status = SlotStatus::Exhausted;
                    }
                }
            }
            Event::Observed { round, report, substitutions } => {
                stale(*round, self.round)?;
                self.network = self
                    .network
                    .refine(&DimeObservation { revealed: report.edges.clone() }.as_map())
                    .map_err(|e| ApiError::Internal(e.to_string()))?;
                for v in &report.reenabled {
                    self.unavailable.remove(v);
                }
                let plan = self.plan.as_mut().ok_or_else(|| ApiError::Internal("observation without plan".into()))?;
                let slot_of = |plan: &RoundPlan, v: usize| {
                    plan.slots
                        .iter()
                        .position(|s| s.status == SlotStatus::Pending && s.invitee == Some(v))
                        .ok_or_else(|| ApiError::Internal(format!("node {v} is not pending")))
                };
                for &v in &report.accepted {
                    let i = slot_of(plan, v)?;
                    plan.slots[i].status = SlotStatus::Accepted;
                    self.chosen.push(v);
                }
                for v in report.failed() {
                    let i = slot_of(plan, v)?;
                    self.unavailable.insert(v);
                    let s = &mut plan.slots[i];
                    s.invitee = None;
                    s.status = SlotStatus::Open;
                    if let Some(sub) = substitutions.iter().find(|x| x.slot == i && x.from == v) {
                        match sub.to {
                            Some(a) => {
                                let pos = s.alternates[s.next_alternate..]
                                    .iter()
                                    .position(|&x| x == a)
                                    .ok_or_else(|| ApiError::Internal(format!("{a} is not a remaining alternate")))?;
                                s.next_alternate += pos + 1;
                                s.invitee = Some(a);
                                s.status = SlotStatus::Pending;
                                s.invited.push(a);
                            }
                            None => {
                                s.next_alternate = s.alternates.len();
                                s.status = SlotStatus::Exhausted;
                            }
                        }
                    }
                }
            }
            Event::Advanced { round, action } => {
                stale(*round, self.round)?;
                let seed = rng::derive(rng::derive(self.settings.seed, *round as u64), u64::MAX);
                self.belief =
                    self.belief.propagate(&self.network, &DimeAction::new(action.clone()), self.settings.l, seed);
                self.round += 1;
                self.plan = None;
            }
        }
        self.version += 1;
        Ok(())
    }
}

/// Deals ranked candidate lists out round-robin so that no node backs up
/// two slots: each slot in turn takes its best candidate not yet taken.
fn disjoint_alternates(ranked: &[Vec<usize>], count: usize) -> Vec<Vec<usize>> {
    let mut taken = BTreeSet::new();
    let mut cursor = vec![0; ranked.len()];
    let mut out = vec![Vec::new(); ranked.len()];
    for _ in 0..count {
        for (i, list) in ranked.iter().enumerate() {
            while let Some(&c) = list.get(cursor[i]) {
                cursor[i] += 1;
                if taken.insert(c) {
                    out[i].push(c);
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn star_request(mode: ContingencyMode) -> CreateRequest {
        // Hub 0 reaches 1..=5, hub 6 reaches 7..=9, 10 reaches 11.
        let mut edges: Vec<_> = (1..=5).map(|d| json!({"src": 0, "dst": d, "p": 0.5})).collect();
        edges.extend((7..=9).map(|d| json!({"src": 6, "dst": d, "p": 0.5})));
        edges.push(json!({"src": 10, "dst": 11, "p": 0.5, "u": 0.5}));
        let network = json!({"nodes": (0..12).map(|i| format!("n{i}")).collect::<Vec<_>>(), "edges": edges});
        CreateRequest {
            network,
            name: None,
            planner: PlannerSpec::Degree,
            k: 2,
            t: 2,
            l: 1,
            mode,
            alternates: 2,
            attendance: 0.5,
            particles: 8,
            seed: 3,
        }
    }

    fn run(state: &mut CampaignState, event: Option<Event>, log: &mut Vec<Record>) {
        if let Some(e) = event {
            state.apply(&e).unwrap();
            log.push(Record { seq: log.len() + 1, ts: 0, event: e });
        }
    }

    #[test]
    fn degree_recommendation_then_substitution() {
        let created = star_request(ContingencyMode::Alternates).into_event();
        let mut log = vec![Record { seq: 1, ts: 0, event: created.clone() }];
        let mut s = CampaignState::create("c1", &created).unwrap();
        let e = s.recommend().unwrap();
        run(&mut s, e, &mut log);
        assert_eq!(s.plan.as_ref().unwrap().nodes(), vec![0, 6]);
        assert!(s.recommend().unwrap().is_none(), "cached");

        let report = Report { absent: vec![0], accepted: vec![6], ..Default::default() };
        let e = s.observe(report).unwrap().unwrap();
        let Event::Observed { substitutions, .. } = &e else { panic!() };
        let alt = s.plan.as_ref().unwrap().slots[0].alternates[0];
        assert_eq!(substitutions, &vec![Substitution { slot: 0, from: 0, to: Some(alt) }]);
        run(&mut s, Some(e), &mut log);
        assert!(s.unavailable.contains(&0));
        assert_eq!(s.chosen, vec![6]);

        let e = s.advance().unwrap();
        run(&mut s, Some(e), &mut log);
        let e = s.recommend().unwrap();
        run(&mut s, e, &mut log);
        let nodes = s.plan.as_ref().unwrap().nodes();
        assert!(!nodes.contains(&0) && !nodes.contains(&6));

        let replayed = CampaignState::replay("c1", &log).unwrap();
        assert_eq!(replayed.fingerprint(), s.fingerprint());
    }

    #[test]
    fn replan_mode_fills_open_slots_only() {
        let created = star_request(ContingencyMode::Replan).into_event();
        let mut log = vec![Record { seq: 1, ts: 0, event: created.clone() }];
        let mut s = CampaignState::create("c1", &created).unwrap();
        let e = s.recommend().unwrap();
        run(&mut s, e, &mut log);
        let e = s.observe(Report { declined: vec![0], accepted: vec![6], ..Default::default() }).unwrap();
        run(&mut s, e, &mut log);
        assert!(s.plan.as_ref().unwrap().needs_replan());
        let e = s.recommend().unwrap().unwrap();
        let Event::Recommended { assignments, .. } = &e else { panic!() };
        assert_eq!(assignments.len(), 1);
        assert_eq!(assignments[0].slot, 0);
        assert!(![0, 6].contains(&assignments[0].node));
        run(&mut s, Some(e), &mut log);
        assert_eq!(s.plan.as_ref().unwrap().slots[1].status, SlotStatus::Accepted);
    }

    #[test]
    fn report_validation() {
        let created = star_request(ContingencyMode::Alternates).into_event();
        let mut s = CampaignState::create("c1", &created).unwrap();
        assert!(matches!(s.observe(Report::default()), Err(ApiError::Conflict(_))));
        let e = s.recommend().unwrap().unwrap();
        s.apply(&e).unwrap();
        assert!(s.observe(Report::default()).unwrap().is_none());
        let bad = |r: Report| matches!(s.observe(r), Err(ApiError::Validation(_)));
        assert!(bad(Report { accepted: vec![11], ..Default::default() }));
        assert!(bad(Report { accepted: vec![0], absent: vec![0], ..Default::default() }));
        assert!(bad(Report { reenabled: vec![3], ..Default::default() }));
        let edge = RevealedEdge { src: 1, dst: 2, exists: true };
        assert!(bad(Report { edges: vec![edge], ..Default::default() }));
        let ok = RevealedEdge { src: 10, dst: 11, exists: true };
        let e = s.observe(Report { edges: vec![ok], ..Default::default() }).unwrap().unwrap();
        s.apply(&e).unwrap();
        assert_eq!(s.network.m(), 0);
    }

    #[test]
    fn alternates_are_dealt_without_sharing() {
        let ranked = vec![vec![5, 6, 7, 8], vec![5, 9, 6, 10]];
        assert_eq!(disjoint_alternates(&ranked, 2), vec![vec![5, 6], vec![9, 10]]);
        assert_eq!(disjoint_alternates(&[vec![1]], 3), vec![vec![1]]);
    }

    #[test]
    fn creation_checks() {
        let mut r = star_request(ContingencyMode::Alternates);
        r.k = 13;
        assert!(matches!(CampaignState::create("c", &r.into_event()), Err(ApiError::Validation(_))));
        let mut r = star_request(ContingencyMode::Alternates);
        r.planner = PlannerSpec::GreedySession;
        assert!(matches!(CampaignState::create("c", &r.into_event()), Err(ApiError::Validation(_))));
    }
}
