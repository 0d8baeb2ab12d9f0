//! Scenario files.
//!
//! ```text
//! # comment
//! [graph]
//! nodes: A B C D
//! A: B C
//! B: D
//! [supply]
//! D
//! [preroots]
//! global: A
//! 1: B
//! [mutator 1]
//! addArc A D
//! delArc B D
//! [collector]
//! variant = workset
//! barrier = dijkstra
//! [schedule]
//! c until-black A
//! m1 2
//! c until-idle
//! ```
//!
//! A mutator section may instead hold one line
//! `workload ops=200 addArc=3 delArc=2 addNew=1 local=1 seed=7`.
//! The schedule is either a list of items, `random seed=7 ratio=3:1`, or
//! `exhaustive max-depth=200 max-states=100000`.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::collector::{CollectorConfig, Variant};
use crate::heap::{HeapError, HeapGraph, MutatorId, MutatorOp, NodeNames, StoreState};
use crate::set::NodeId;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Heap(#[from] HeapError),
}

fn perr(line: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkloadParams {
    pub ops: usize,
    pub add_arc: u32,
    pub del_arc: u32,
    pub add_new: u32,
    pub local: u32,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            ops: 100,
            add_arc: 3,
            del_arc: 2,
            add_new: 1,
            local: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MutatorScript {
    Ops(Vec<MutatorOp>),
    Workload(WorkloadParams),
}

impl MutatorScript {
    /// Number of operations the script will issue.
    pub fn len(&self) -> usize {
        match self {
            MutatorScript::Ops(ops) => ops.len(),
            MutatorScript::Workload(p) => p.ops,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleItem {
    /// `c` or `c N`: that many collector actions.
    Collector(usize),
    /// `c until-black X`
    CollectorUntilBlack(NodeId),
    /// `c until-idle`: at least one action, then until the collector is idle.
    CollectorUntilIdle,
    /// `mK` or `mK N`: that many actions of mutator K.
    Mutator(MutatorId, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreBounds {
    /// Actions on one path before it is cut (and the report flagged incomplete).
    pub max_depth: usize,
    /// States visited before exploration stops.
    pub max_states: usize,
    /// Collector cycles allowed on a path.
    pub max_cycles: usize,
    /// Collector actions allowed on a path.
    pub max_collector_steps: usize,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            max_depth: 400,
            max_states: 200_000,
            max_cycles: 1,
            max_collector_steps: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    Scripted(Vec<ScheduleItem>),
    Random { seed: u64, mutator: u32, collector: u32 },
    Exhaustive(ExploreBounds),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub names: NodeNames,
    pub graph: HeapGraph,
    pub supply: Vec<NodeId>,
    /// `pre_roots[0]` holds the globals, `pre_roots[m]` mutator `m`.
    pub pre_roots: Vec<Vec<NodeId>>,
    /// `mutators[m - 1]` is the script of mutator `m`.
    pub mutators: Vec<MutatorScript>,
    pub collector: CollectorConfig,
    pub schedule: Schedule,
}

impl Scenario {
    pub fn parse(name: &str, text: &str) -> Result<Scenario, ScenarioError> {
        Parser::default().parse(name, text)
    }

    pub fn memory_size(&self) -> usize {
        self.graph.memory_size()
    }

    pub fn mutator_count(&self) -> usize {
        self.mutators.len()
    }

    /// Fresh store for this scenario; validates the heap invariants.
    pub fn store(&self) -> Result<StoreState, HeapError> {
        StoreState::new(
            self.graph.clone(),
            self.supply.iter().copied(),
            self.pre_roots.clone(),
            self.names.clone(),
        )
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.names.lookup(name)
    }

    /// Total scripted operations (workload scripts count their op budget).
    pub fn op_count(&self) -> usize {
        self.mutators.iter().map(MutatorScript::len).sum()
    }
}

#[derive(Default)]
struct Parser {
    names: Vec<String>,
    index: BTreeMap<String, NodeId>,
    declared: bool,
}

enum Section {
    Graph,
    Supply,
    PreRoots,
    Mutator(MutatorId),
    Collector,
    Schedule,
}

impl Parser {
    fn intern(&mut self, line: usize, name: &str) -> Result<NodeId, ScenarioError> {
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        if self.declared {
            return Err(perr(line, format!("undeclared node `{name}`")));
        }
        if name.is_empty() || name.contains(['{', '}', ',', '=', ':']) {
            return Err(perr(line, format!("bad node name `{name}`")));
        }
        let id = NodeId::from(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    fn lookup(&self, line: usize, name: &str) -> Result<NodeId, ScenarioError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| perr(line, format!("undeclared node `{name}`")))
    }

    fn parse(mut self, name: &str, text: &str) -> Result<Scenario, ScenarioError> {
        // (line number, section, content) after stripping comments
        let mut section = None;
        let mut graph_lines = Vec::new();
        let mut supply_lines = Vec::new();
        let mut preroot_lines = Vec::new();
        let mut mutator_lines: BTreeMap<MutatorId, Vec<(usize, String)>> = BTreeMap::new();
        let mut collector_lines = Vec::new();
        let mut schedule_lines = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('[') {
                let h = h
                    .strip_suffix(']')
                    .ok_or_else(|| perr(ln, "unterminated section header"))?
                    .trim();
                section = Some(match h.split_whitespace().collect::<Vec<_>>().as_slice() {
                    ["graph"] => Section::Graph,
                    ["supply"] => Section::Supply,
                    ["preroots"] => Section::PreRoots,
                    ["collector"] => Section::Collector,
                    ["schedule"] => Section::Schedule,
                    ["mutator", id] => {
                        let m: MutatorId = id
                            .parse()
                            .ok()
                            .filter(|&m| m >= 1)
                            .ok_or_else(|| perr(ln, format!("bad mutator id `{id}`")))?;
                        mutator_lines.entry(m).or_default();
                        Section::Mutator(m)
                    }
                    _ => return Err(perr(ln, format!("unknown section `[{h}]`"))),
                });
                continue;
            }
            let entry = (ln, line.to_string());
            match section {
                None => return Err(perr(ln, "content before the first section")),
                Some(Section::Graph) => graph_lines.push(entry),
                Some(Section::Supply) => supply_lines.push(entry),
                Some(Section::PreRoots) => preroot_lines.push(entry),
                Some(Section::Mutator(m)) => mutator_lines.entry(m).or_default().push(entry),
                Some(Section::Collector) => collector_lines.push(entry),
                Some(Section::Schedule) => schedule_lines.push(entry),
            }
        }

        // nodes and arcs
        let mut arcs: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        for (ln, line) in &graph_lines {
            if let Some(rest) = line.strip_prefix("nodes:") {
                if self.declared || !self.names.is_empty() {
                    return Err(perr(*ln, "`nodes:` must come first and only once"));
                }
                for n in rest.split_whitespace() {
                    if self.index.contains_key(n) {
                        return Err(perr(*ln, format!("duplicate node `{n}`")));
                    }
                    self.intern(*ln, n)?;
                }
                self.declared = true;
                continue;
            }
            let (src, dsts) = line
                .split_once("->")
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| perr(*ln, "expected `node: successors`"))?;
            let a = self.intern(*ln, src.trim())?;
            let mut out = Vec::new();
            for d in dsts.split_whitespace() {
                out.push(self.intern(*ln, d)?);
            }
            arcs.push((a, out));
        }
        let mut supply = Vec::new();
        for (ln, line) in &supply_lines {
            for n in line.split_whitespace() {
                supply.push(self.intern(*ln, n)?);
            }
        }
        let mut pre: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for (ln, line) in &preroot_lines {
            let (owner, targets) = line
                .split_once(':')
                .ok_or_else(|| perr(*ln, "expected `global: nodes` or `<mutator>: nodes`"))?;
            let owner = owner.trim();
            let idx = if owner == "global" || owner == "0" {
                0
            } else {
                owner
                    .parse::<usize>()
                    .ok()
                    .filter(|&m| m >= 1)
                    .ok_or_else(|| perr(*ln, format!("bad pre-root owner `{owner}`")))?
            };
            let slots = pre.entry(idx).or_default();
            for n in targets.split_whitespace() {
                slots.push(self.intern(*ln, n)?);
            }
        }
        self.declared = true;

        let n = self.names.len();
        let mut graph = HeapGraph::new(n);
        for (a, dsts) in arcs {
            for b in dsts {
                graph.push_arc(a, b);
            }
        }

        let q = mutator_lines
            .keys()
            .copied()
            .chain(pre.keys().copied())
            .max()
            .unwrap_or(0);
        let mut pre_roots = vec![Vec::new(); q + 1];
        for (idx, slots) in pre {
            pre_roots[idx] = slots;
        }
        let mut mutators = Vec::with_capacity(q);
        for m in 1..=q {
            let lines = mutator_lines.remove(&m).unwrap_or_default();
            mutators.push(self.parse_script(m, q, &lines)?);
        }

        let collector = parse_collector(&collector_lines)?;
        let schedule = self.parse_schedule(q, &schedule_lines)?;
        let names = NodeNames::new(self.names).ok_or_else(|| perr(0, "duplicate node names"))?;
        let scenario = Scenario {
            name: name.to_string(),
            names,
            graph,
            supply,
            pre_roots,
            mutators,
            collector,
            schedule,
        };
        scenario.store()?;
        Ok(scenario)
    }

    fn parse_script(&self, m: MutatorId, q: usize, lines: &[(usize, String)]) -> Result<MutatorScript, ScenarioError> {
        if let Some((ln, first)) = lines.first() {
            if let Some(rest) = first.strip_prefix("workload") {
                if lines.len() > 1 {
                    return Err(perr(lines[1].0, "a workload mutator takes no other lines"));
                }
                return parse_workload(*ln, rest, m).map(MutatorScript::Workload);
            }
        }
        let mut ops = Vec::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let mutator_arg = |s: &str| -> Result<MutatorId, ScenarioError> {
                s.parse::<MutatorId>()
                    .ok()
                    .filter(|&x| x >= 1 && x <= q)
                    .ok_or_else(|| perr(*ln, format!("bad mutator `{s}`")))
            };
            let op = match toks.as_slice() {
                ["addArc", a, b] => MutatorOp::AddArc(self.lookup(*ln, a)?, self.lookup(*ln, b)?),
                ["delArc", a, b] => MutatorOp::DelArc(self.lookup(*ln, a)?, self.lookup(*ln, b)?),
                ["addNew", a] => MutatorOp::AddNew(self.lookup(*ln, a)?),
                ["load", b] => MutatorOp::LocalLoad(m, self.lookup(*ln, b)?),
                ["drop", b] => MutatorOp::LocalDrop(m, self.lookup(*ln, b)?),
                ["load", who, b] => MutatorOp::LocalLoad(mutator_arg(who)?, self.lookup(*ln, b)?),
                ["drop", who, b] => MutatorOp::LocalDrop(mutator_arg(who)?, self.lookup(*ln, b)?),
                _ => return Err(perr(*ln, format!("bad operation `{line}`"))),
            };
            ops.push(op);
        }
        Ok(MutatorScript::Ops(ops))
    }

    fn parse_schedule(&self, q: usize, lines: &[(usize, String)]) -> Result<Schedule, ScenarioError> {
        if let Some((ln, first)) = lines.first() {
            let toks: Vec<&str> = first.split_whitespace().collect();
            if matches!(toks.first(), Some(&"random") | Some(&"exhaustive")) {
                if lines.len() > 1 {
                    return Err(perr(lines[1].0, "nothing may follow a random or exhaustive schedule"));
                }
                let kv = key_values(*ln, &toks[1..])?;
                if toks[0] == "random" {
                    let mut seed = 0;
                    let (mut mw, mut cw) = (1, 1);
                    for (k, v) in kv {
                        match k.as_str() {
                            "seed" => seed = parse_num(*ln, &v)?,
                            "ratio" => {
                                let (a, b) = v
                                    .split_once(':')
                                    .ok_or_else(|| perr(*ln, "ratio is `mutator:collector`"))?;
                                mw = parse_num(*ln, a)?;
                                cw = parse_num(*ln, b)?;
                                if mw + cw == 0 {
                                    return Err(perr(*ln, "ratio must not be 0:0"));
                                }
                            }
                            _ => return Err(perr(*ln, format!("unknown key `{k}`"))),
                        }
                    }
                    return Ok(Schedule::Random { seed, mutator: mw, collector: cw });
                }
                let mut b = ExploreBounds::default();
                for (k, v) in kv {
                    match k.as_str() {
                        "max-depth" => b.max_depth = parse_num(*ln, &v)?,
                        "max-states" => b.max_states = parse_num(*ln, &v)?,
                        "max-cycles" => b.max_cycles = parse_num(*ln, &v)?,
                        "max-collector-steps" => b.max_collector_steps = parse_num(*ln, &v)?,
                        _ => return Err(perr(*ln, format!("unknown key `{k}`"))),
                    }
                }
                return Ok(Schedule::Exhaustive(b));
            }
        }
        let mut items = Vec::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let item = match toks.as_slice() {
                ["c"] => ScheduleItem::Collector(1),
                ["c", "until-idle"] => ScheduleItem::CollectorUntilIdle,
                ["c", "until-black", x] => ScheduleItem::CollectorUntilBlack(self.lookup(*ln, x)?),
                ["c", k] => ScheduleItem::Collector(parse_num(*ln, k)?),
                [m] | [m, _] if m.starts_with('m') => {
                    let id: MutatorId = m[1..]
                        .parse()
                        .ok()
                        .filter(|&x| x >= 1 && x <= q)
                        .ok_or_else(|| perr(*ln, format!("no mutator `{m}`")))?;
                    let k = match toks.get(1) {
                        Some(k) => parse_num(*ln, k)?,
                        None => 1,
                    };
                    ScheduleItem::Mutator(id, k)
                }
                [c] if c.starts_with('c') && c.len() > 1 => ScheduleItem::Collector(parse_num(*ln, &c[1..])?),
                _ => return Err(perr(*ln, format!("bad schedule item `{line}`"))),
            };
            items.push(item);
        }
        Ok(Schedule::Scripted(items))
    }
}

fn parse_num<T: FromStr>(ln: usize, s: &str) -> Result<T, ScenarioError> {
    s.parse().map_err(|_| perr(ln, format!("bad number `{s}`")))
}

fn key_values(ln: usize, toks: &[&str]) -> Result<Vec<(String, String)>, ScenarioError> {
    toks.iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| perr(ln, format!("expected key=value, got `{t}`")))
        })
        .collect()
}

fn parse_workload(ln: usize, rest: &str, m: MutatorId) -> Result<WorkloadParams, ScenarioError> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    let mut p = WorkloadParams {
        seed: m as u64,
        ..WorkloadParams::default()
    };
    for (k, v) in key_values(ln, &toks)? {
        match k.as_str() {
            "ops" => p.ops = parse_num(ln, &v)?,
            "addArc" => p.add_arc = parse_num(ln, &v)?,
            "delArc" => p.del_arc = parse_num(ln, &v)?,
            "addNew" => p.add_new = parse_num(ln, &v)?,
            "local" => p.local = parse_num(ln, &v)?,
            "seed" => p.seed = parse_num(ln, &v)?,
            _ => return Err(perr(ln, format!("unknown workload key `{k}`"))),
        }
    }
    if p.add_arc + p.del_arc + p.add_new + p.local == 0 {
        return Err(perr(ln, "workload weights are all zero"));
    }
    Ok(p)
}

fn parse_collector(lines: &[(usize, String)]) -> Result<CollectorConfig, ScenarioError> {
    let mut kv = Vec::new();
    for (ln, line) in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| perr(*ln, "expected `key = value`"))?;
        kv.push((*ln, k.trim().to_string(), v.trim().to_string()));
    }
    let variant = match kv.iter().find(|(_, k, _)| k == "variant" || k == "collector") {
        Some((ln, _, v)) => v.parse::<Variant>().map_err(|e| perr(*ln, e.to_string()))?,
        None => Variant::Workset,
    };
    let mut cfg = CollectorConfig::new(variant);
    for (ln, k, v) in kv {
        let e = |e: crate::collector::ConfigParseError| perr(ln, e.to_string());
        match k.as_str() {
            "variant" | "collector" => {}
            "barrier" => cfg.barrier = v.parse().map_err(e)?,
            "granularity" => cfg.granularity = v.parse().map_err(e)?,
            "gray-policy" => cfg.gray_policy = v.parse().map_err(e)?,
            "root-scan" => cfg.root_scan = v.parse().map_err(e)?,
            "blacken" => cfg.blacken_guard = v.parse().map_err(e)?,
            "cards" => cfg.card_count = parse_num(ln, &v)?,
            "interim-drain" => cfg.interim_drain = parse_num(ln, &v)?,
            _ => return Err(perr(ln, format!("unknown collector key `{k}`"))),
        }
    }
    Ok(cfg)
}
