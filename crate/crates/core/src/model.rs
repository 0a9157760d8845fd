//! Finite POMDPs, their JSON form and structural validation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A probability distribution over successor indices; zero entries are never stored.
pub type Distribution = Vec<(usize, Rational)>;

/// Per-dimension weight vectors indexed `[state][action]`; `None` where unset.
pub type WeightTable = Vec<Vec<Option<Vec<Rational>>>>;

#[derive(Clone, Debug, PartialEq)]
pub struct Pomdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub obs: Vec<usize>,
    /// `transitions[s][a]` is `None` when `a` is disabled in `s`.
    pub transitions: Vec<Vec<Option<Distribution>>>,
    pub weights: BTreeMap<String, WeightTable>,
}

/// One scalar weight per `(state, action)`; zero on disabled pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction(pub Vec<Vec<Rational>>);

impl WeightFunction {
    pub fn constant(m: &Pomdp, value: Rational) -> Self {
        WeightFunction(vec![vec![value; m.actions.len()]; m.states.len()])
    }

    pub fn get(&self, s: usize, a: usize) -> &Rational {
        &self.0[s][a]
    }

    pub fn max_abs(&self) -> Rational {
        self.0
            .iter()
            .flatten()
            .map(|w| w.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_non_negative(&self) -> bool {
        self.0.iter().flatten().all(|w| !w.is_negative())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub location: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl Pomdp {
    /// A model with no transitions and identity observations.
    pub fn new(states: &[&str], actions: &[&str]) -> Self {
        let states: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let n = states.len();
        Pomdp {
            observations: states.clone(),
            obs: (0..n).collect(),
            transitions: vec![vec![None; actions.len()]; n],
            actions: actions.iter().map(|a| a.to_string()).collect(),
            states,
            weights: BTreeMap::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn action_index(&self, name: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::Schema(format!("unknown action `{name}`")))
    }

    pub fn observation_index(&self, name: &str) -> Result<usize> {
        self.observations
            .iter()
            .position(|z| z == name)
            .ok_or_else(|| Error::Schema(format!("unknown observation `{name}`")))
    }

    pub fn state_set(&self, names: &[impl AsRef<str>]) -> Result<BTreeSet<usize>> {
        names.iter().map(|n| self.state_index(n.as_ref())).collect()
    }

    pub fn dist(&self, s: usize, a: usize) -> Option<&Distribution> {
        self.transitions[s][a].as_ref()
    }

    pub fn enabled(&self, s: usize) -> Vec<usize> {
        (0..self.actions.len()).filter(|&a| self.transitions[s][a].is_some()).collect()
    }

    /// Enabled actions of the first state carrying observation `z`.
    pub fn enabled_for_obs(&self, z: usize) -> Vec<usize> {
        self.obs
            .iter()
            .position(|&o| o == z)
            .map(|s| self.enabled(s))
            .unwrap_or_default()
    }

    pub fn is_mdp(&self) -> bool {
        let mut seen = vec![false; self.observations.len()];
        self.obs.iter().all(|&z| !std::mem::replace(&mut seen[z], true))
    }

    /// Successor adjacency over all enabled actions.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.num_states())
            .map(|s| {
                let succ: BTreeSet<usize> = self.transitions[s]
                    .iter()
                    .flatten()
                    .flat_map(|d| d.iter().map(|(t, _)| *t))
                    .collect();
                succ.into_iter().collect()
            })
            .collect()
    }

    pub fn min_transition_prob(&self) -> Rational {
        self.transitions
            .iter()
            .flatten()
            .flatten()
            .flat_map(|d| d.iter().map(|(_, p)| p.clone()))
            .min()
            .unwrap_or_else(Rational::one)
    }

    pub fn set_transition(&mut self, s: &str, a: &str, dist: &[(&str, Rational)]) -> Result<()> {
        let (s, a) = (self.state_index(s)?, self.action_index(a)?);
        let mut d = Distribution::new();
        for (t, p) in dist {
            if !p.is_zero() {
                d.push((self.state_index(t)?, p.clone()));
            }
        }
        d.sort_by_key(|e| e.0);
        self.transitions[s][a] = Some(d);
        Ok(())
    }

    /// Extracts component `component` of the named weight table.
    pub fn weight_function(&self, name: &str, component: usize) -> Result<WeightFunction> {
        let table = self
            .weights
            .get(name)
            .ok_or_else(|| Error::Schema(format!("unknown weight table `{name}`")))?;
        let mut out = vec![vec![Rational::zero(); self.num_actions()]; self.num_states()];
        for (s, row) in table.iter().enumerate() {
            for (a, entry) in row.iter().enumerate() {
                if let Some(v) = entry {
                    out[s][a] = v
                        .get(component)
                        .cloned()
                        .ok_or_else(|| Error::Schema(format!("weight `{name}` has no component {component}")))?;
                }
            }
        }
        Ok(WeightFunction(out))
    }
}

pub fn validate(m: &Pomdp) -> ValidationReport {
    let mut v = Vec::new();
    let mut push = |rule: &'static str, location: String, message: String| {
        v.push(Violation { rule, location, message });
    };
    if m.states.is_empty() {
        push("empty-model", "states".into(), "model has no states".into());
    }
    for s in 0..m.num_states() {
        let name = &m.states[s];
        if m.enabled(s).is_empty() {
            push("deadlock", name.clone(), format!("state `{name}` has no enabled action"));
        }
        for a in m.enabled(s) {
            let d = m.dist(s, a).unwrap();
            let loc = format!("{name},{}", m.actions[a]);
            for (t, p) in d {
                if p.is_negative() || *p > Rational::one() {
                    push(
                        "distribution-range",
                        loc.clone(),
                        format!("probability {} to `{}` is outside [0,1]", rational::format(p), m.states[*t]),
                    );
                }
            }
            let total = d.iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
            if !total.is_one() {
                push("distribution-sum", loc, format!("probabilities sum to {}", rational::format(&total)));
            }
        }
    }
    let mut first_of_obs: HashMap<usize, usize> = HashMap::new();
    for s in 0..m.num_states() {
        let z = m.obs[s];
        match first_of_obs.get(&z) {
            None => {
                first_of_obs.insert(z, s);
            }
            Some(&t) => {
                if m.enabled(s) != m.enabled(t) {
                    push(
                        "obs-action-consistency",
                        m.states[s].clone(),
                        format!(
                            "states `{}` and `{}` share observation `{}` but differ in enabled actions",
                            m.states[t], m.states[s], m.observations[z]
                        ),
                    );
                }
            }
        }
    }
    for (name, table) in &m.weights {
        let mut arity: Option<usize> = None;
        for s in 0..m.num_states() {
            for a in m.enabled(s) {
                match &table[s][a] {
                    None => push(
                        "weight-coverage",
                        format!("{},{}", m.states[s], m.actions[a]),
                        format!("weight table `{name}` is undefined on an enabled pair"),
                    ),
                    Some(w) => {
                        if *arity.get_or_insert(w.len()) != w.len() {
                            push(
                                "weight-arity",
                                format!("{},{}", m.states[s], m.actions[a]),
                                format!("weight table `{name}` mixes vector lengths"),
                            );
                        }
                    }
                }
            }
        }
    }
    ValidationReport { ok: v.is_empty(), violations: v }
}

/// States reachable from `s0` through any enabled action.
pub fn reachable_states(m: &Pomdp, s0: usize) -> Result<BTreeSet<usize>> {
    if s0 >= m.num_states() {
        return Err(Error::UnknownState(format!("#{s0}")));
    }
    let seen = crate::graph::forward_reachable(&m.adjacency(), &[s0]);
    Ok((0..m.num_states()).filter(|&s| seen[s]).collect())
}

/// Strongly connected components of the model graph with the reachability
/// relation between them (`reach[i][j]` iff component `j` is reachable from `i`).
#[derive(Clone, Debug)]
pub struct SccDecomposition {
    pub components: Vec<Vec<usize>>,
    pub reach: Vec<Vec<bool>>,
}

impl SccDecomposition {
    pub fn component_of(&self, s: usize) -> usize {
        self.components.iter().position(|c| c.contains(&s)).unwrap()
    }
}

/// Components ordered by their smallest state index.
pub fn scc_decompose(m: &Pomdp) -> SccDecomposition {
    let adj = m.adjacency();
    let mut components = crate::graph::scc(&adj);
    components.sort_by_key(|c| c[0]);
    let reach = components
        .iter()
        .map(|c| {
            let seen = crate::graph::forward_reachable(&adj, &c[..1]);
            components.iter().map(|d| seen[d[0]]).collect()
        })
        .collect();
    SccDecomposition { components, reach }
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RatText {
    Text(String),
    Number(serde_json::Number),
}

impl RatText {
    fn parse(&self) -> Result<Rational> {
        match self {
            RatText::Text(s) => rational::parse(s),
            RatText::Number(n) => rational::parse(&n.to_string()),
        }
    }
}

/// A payoff dimension as written in a model file; resolved against the model
/// by [`crate::payoff::PayoffSpec::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffDecl {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negate: bool,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    states: Vec<String>,
    actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    observations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obs: Option<BTreeMap<String, String>>,
    transitions: BTreeMap<String, BTreeMap<String, BTreeMap<String, RatText>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    weights: BTreeMap<String, BTreeMap<String, Vec<RatText>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    payoffs: Vec<PayoffDecl>,
}

/// A model file: the model plus its declared payoff dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub model: Pomdp,
    pub payoffs: Vec<PayoffDecl>,
}

pub fn load_model(text: &str) -> Result<Pomdp> {
    load_document(text).map(|d| d.model)
}

pub fn load_document(text: &str) -> Result<Document> {
    let raw: RawModel = serde_json::from_str(text)?;
    if raw.states.is_empty() {
        return Err(Error::Schema("`states` is empty".into()));
    }
    if raw.actions.is_empty() {
        return Err(Error::Schema("`actions` is empty".into()));
    }
    check_unique("states", &raw.states)?;
    check_unique("actions", &raw.actions)?;
    let names: Vec<&str> = raw.states.iter().map(String::as_str).collect();
    let acts: Vec<&str> = raw.actions.iter().map(String::as_str).collect();
    let mut m = Pomdp::new(&names, &acts);

    match (&raw.observations, &raw.obs) {
        (None, None) => {}
        (observations, Some(obs)) => {
            let mut list = observations.clone().unwrap_or_default();
            if observations.is_none() {
                for s in &raw.states {
                    if let Some(z) = obs.get(s) {
                        if !list.contains(z) {
                            list.push(z.clone());
                        }
                    }
                }
            }
            check_unique("observations", &list)?;
            m.observations = list;
            for k in obs.keys() {
                m.state_index(k).map_err(|_| Error::Schema(format!("`obs` names unknown state `{k}`")))?;
            }
            for (s, name) in raw.states.iter().enumerate() {
                let z = obs
                    .get(name)
                    .ok_or_else(|| Error::Schema(format!("state `{name}` has no observation")))?;
                m.obs[s] = m.observation_index(z)?;
            }
        }
        (Some(_), None) => {
            return Err(Error::Schema("`observations` given without `obs`".into()));
        }
    }

    for (s_name, by_action) in &raw.transitions {
        let s = m.state_index(s_name).map_err(|_| Error::Schema(format!("transition from unknown state `{s_name}`")))?;
        for (a_name, succ) in by_action {
            let a = m.action_index(a_name)?;
            let mut d = Distribution::new();
            for (t_name, p) in succ {
                let t = m
                    .state_index(t_name)
                    .map_err(|_| Error::Schema(format!("transition to unknown state `{t_name}`")))?;
                let p = p.parse()?;
                if !p.is_zero() {
                    d.push((t, p));
                }
            }
            d.sort_by_key(|e| e.0);
            m.transitions[s][a] = Some(d);
        }
    }

    for (name, entries) in &raw.weights {
        let mut table: WeightTable = vec![vec![None; m.num_actions()]; m.num_states()];
        for (key, values) in entries {
            let (s_name, a_name) = key
                .split_once(',')
                .ok_or_else(|| Error::Schema(format!("weight key `{key}` is not `state,action`")))?;
            let s = m
                .state_index(s_name.trim())
                .map_err(|_| Error::Schema(format!("weight key `{key}` names an unknown state")))?;
            let a = m.action_index(a_name.trim())?;
            table[s][a] = Some(values.iter().map(RatText::parse).collect::<Result<_>>()?);
        }
        m.weights.insert(name.clone(), table);
    }

    Ok(Document { model: m, payoffs: raw.payoffs })
}

fn check_unique(field: &str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Schema(format!("duplicate entry `{n}` in `{field}`")));
        }
    }
    Ok(())
}

pub fn serialize_model(m: &Pomdp) -> String {
    serialize_document(&Document { model: m.clone(), payoffs: Vec::new() })
}

pub fn serialize_document(doc: &Document) -> String {
    let m = &doc.model;
    let identity = m.is_mdp() && m.observations == m.states && m.obs.iter().enumerate().all(|(s, &z)| s == z);
    let mut transitions = BTreeMap::new();
    for s in 0..m.num_states() {
        let mut by_action = BTreeMap::new();
        for a in m.enabled(s) {
            let succ = m.dist(s, a).unwrap()
                .iter()
                .map(|(t, p)| (m.states[*t].clone(), RatText::Text(rational::format(p))))
                .collect();
            by_action.insert(m.actions[a].clone(), succ);
        }
        transitions.insert(m.states[s].clone(), by_action);
    }
    let weights = m
        .weights
        .iter()
        .map(|(name, table)| {
            let mut entries = BTreeMap::new();
            for (s, row) in table.iter().enumerate() {
                for (a, entry) in row.iter().enumerate() {
                    if let Some(v) = entry {
                        entries.insert(
                            format!("{},{}", m.states[s], m.actions[a]),
                            v.iter().map(|x| RatText::Text(rational::format(x))).collect(),
                        );
                    }
                }
            }
            (name.clone(), entries)
        })
        .collect();
    let raw = RawModel {
        states: m.states.clone(),
        actions: m.actions.clone(),
        observations: (!identity).then(|| m.observations.clone()),
        obs: (!identity).then(|| {
            m.states
                .iter()
                .enumerate()
                .map(|(s, n)| (n.clone(), m.observations[m.obs[s]].clone()))
                .collect()
        }),
        transitions,
        weights,
        payoffs: doc.payoffs.clone(),
    };
    serde_json::to_string_pretty(&raw).expect("model serializes")
}

// ---------------------------------------------------------------------------
// Cost unrolling

/// A model whose states pair an original state with the cost accumulated
/// before the first target visit, capped at a bound.
#[derive(Clone, Debug)]
pub struct Unrolled {
    pub model: Pomdp,
    pub initial: usize,
    /// Unrolled states where a target was reached with cost within the bound.
    pub within: BTreeSet<usize>,
    /// Original state of each unrolled state.
    pub origin: Vec<usize>,
}

/// Unrolls the cost counter of `w` (non-negative) up to `bound` so that
/// `P(cost to reach target <= bound)` becomes a reachability probability.
///
/// Observations and actions keep their original names and order, so
/// strategies written for `m` apply to the unrolled model unchanged.
pub fn unroll_cost(m: &Pomdp, w: &WeightFunction, target: &BTreeSet<usize>, s0: usize, bound: &Rational) -> Result<Unrolled> {
    if !w.is_non_negative() {
        return Err(Error::PreconditionViolated("cost unrolling needs non-negative weights".into()));
    }
    type Key = (usize, Option<Rational>);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |k: Key, keys: &mut Vec<Key>, queue: &mut VecDeque<usize>| -> usize {
        *index.entry(k.clone()).or_insert_with(|| {
            keys.push(k);
            queue.push_back(keys.len() - 1);
            keys.len() - 1
        })
    };
    let init = intern((s0, Some(Rational::zero())), &mut keys, &mut queue);
    let mut edges: Vec<Vec<Option<Distribution>>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let (s, cost) = keys[i].clone();
        let mut row = vec![None; m.num_actions()];
        for a in m.enabled(s) {
            let next_cost = match &cost {
                Some(c) if !target.contains(&s) => {
                    let c2 = c + w.get(s, a);
                    (c2 <= *bound).then_some(c2)
                }
                other => other.clone(),
            };
            let mut d = Distribution::new();
            for (t, p) in m.dist(s, a).unwrap() {
                let j = intern((*t, next_cost.clone()), &mut keys, &mut queue);
                d.push((j, p.clone()));
            }
            row[a] = Some(d);
        }
        if edges.len() <= i {
            edges.resize(i + 1, Vec::new());
        }
        edges[i] = row;
    }
    edges.resize(keys.len(), vec![None; m.num_actions()]);

    let states: Vec<String> = keys
        .iter()
        .map(|(s, c)| match c {
            Some(c) => format!("{}@{}", m.states[*s], rational::format(c)),
            None => format!("{}@over", m.states[*s]),
        })
        .collect();
    let mut weights = BTreeMap::new();
    for (name, table) in &m.weights {
        weights.insert(name.clone(), keys.iter().map(|(s, _)| table[*s].clone()).collect());
    }
    let model = Pomdp {
        states,
        actions: m.actions.clone(),
        observations: m.observations.clone(),
        obs: keys.iter().map(|(s, _)| m.obs[*s]).collect(),
        transitions: edges
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|d| {
                        d.map(|mut d| {
                            d.sort_by_key(|e| e.0);
                            d
                        })
                    })
                    .collect()
            })
            .collect(),
        weights,
    };
    let within = keys
        .iter()
        .enumerate()
        .filter(|(_, (s, c))| target.contains(s) && c.is_some())
        .map(|(i, _)| i)
        .collect();
    Ok(Unrolled { model, initial: init, within, origin: keys.iter().map(|k| k.0).collect() })
}
