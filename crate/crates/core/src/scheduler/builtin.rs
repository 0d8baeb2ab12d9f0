use super::scenario::Scenario;

const BUILTINS: &[(&str, &str)] = &[
    ("empty", "[graph]\n[schedule]\nc until-idle\n"),
    ("dijkstra_bug", include_str!("../../../../scenarios/dijkstra_bug.scn")),
    ("root_race", include_str!("../../../../scenarios/root_race.scn")),
    ("two_cycle_floating", include_str!("../../../../scenarios/two_cycle_floating.scn")),
    ("alloc_stall", include_str!("../../../../scenarios/alloc_stall.scn")),
    ("bug_race_explore", include_str!("../../../../scenarios/bug_race_explore.scn")),
    ("random_workload", include_str!("../../../../scenarios/random_workload.scn")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// Parses a bundled scenario by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    let (n, text) = BUILTINS.iter().find(|(n, _)| *n == name)?;
    Some(Scenario::parse(n, text).expect("bundled scenario parses"))
}
