use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown {what} `{value}` (expected one of: {expected})")]
pub struct ConfigParseError {
    pub what: &'static str,
    pub value: String,
    pub expected: &'static str,
}

macro_rules! keyword_enum {
    ($name:ident, $what:literal, { $($variant:ident => [$kw0:literal $(, $kw:literal)*]),+ $(,)? }) => {
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn keyword(&self) -> &'static str {
                match self {
                    $($name::$variant => $kw0),+
                }
            }
        }

        impl FromStr for $name {
            type Err = ConfigParseError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let lower = s.to_ascii_lowercase();
                $(if [$kw0 $(, $kw)*].contains(&lower.as_str()) {
                    return Ok($name::$variant);
                })+
                Err(ConfigParseError {
                    what: $what,
                    value: s.to_string(),
                    expected: concat!($($kw0, " "),+),
                })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    StopTheWorld,
    Workset,
    DirtySet,
    Snapshot,
    DirtyCards,
}

keyword_enum!(Variant, "collector", {
    StopTheWorld => ["stw", "stop-the-world", "stoptheworld"],
    Workset => ["workset"],
    DirtySet => ["dirty", "dirtyset", "dirty-set"],
    Snapshot => ["snapshot"],
    DirtyCards => ["cards", "dirtycards", "dirty-cards"],
});

impl Variant {
    /// Barrier hits go to the dirty set rather than gray.
    pub fn uses_dirty_set(self) -> bool {
        matches!(self, Variant::DirtySet | Variant::DirtyCards)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Barrier {
    None,
    /// on `addArc(a, b)` record `b`
    Dijkstra,
    /// on `addArc(a, b)` record `a`
    Steele,
    /// on `delArc(a, b)` record `b`
    Yuasa,
}

keyword_enum!(Barrier, "barrier", {
    None => ["none", "nobarrier", "no-barrier"],
    Dijkstra => ["dijkstra", "dijkstrainstall", "dijkstra-install"],
    Steele => ["steele", "steeleinstall", "steele-install"],
    Yuasa => ["yuasa", "yuasadelete", "yuasa-delete"],
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    /// blacken a node and gray all its successors in one action
    Coarse,
    /// one arc per action, then a separate blacken
    Fine,
}

keyword_enum!(Granularity, "granularity", {
    Coarse => ["coarse"],
    Fine => ["fine"],
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrayPolicy {
    IteratedScan,
    StackDfs,
    QueueBfs,
    BoundedCache(usize),
}

impl GrayPolicy {
    pub const ALL: &'static [GrayPolicy] = &[
        GrayPolicy::IteratedScan,
        GrayPolicy::StackDfs,
        GrayPolicy::QueueBfs,
        GrayPolicy::BoundedCache(4),
    ];
}

impl FromStr for GrayPolicy {
    type Err = ConfigParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let err = || ConfigParseError {
            what: "gray policy",
            value: s.to_string(),
            expected: "scan stack queue cache:<k>",
        };
        match lower.as_str() {
            "scan" | "iterated" | "iteratedscan" | "iterated-scan" => Ok(GrayPolicy::IteratedScan),
            "stack" | "dfs" | "stackdfs" => Ok(GrayPolicy::StackDfs),
            "queue" | "bfs" | "queuebfs" => Ok(GrayPolicy::QueueBfs),
            _ => {
                let k = lower
                    .strip_prefix("cache:")
                    .or_else(|| lower.strip_prefix("cache="))
                    .ok_or_else(err)?;
                match k.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(GrayPolicy::BoundedCache(k)),
                    _ => Err(err()),
                }
            }
        }
    }
}

impl fmt::Display for GrayPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrayPolicy::IteratedScan => f.write_str("scan"),
            GrayPolicy::StackDfs => f.write_str("stack"),
            GrayPolicy::QueueBfs => f.write_str("queue"),
            GrayPolicy::BoundedCache(k) => write!(f, "cache:{k}"),
        }
    }
}

/// How mutator-local roots enter the marked set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootScan {
    /// Per-mutator handshake scans, plus a stop-the-world rescan of all
    /// pre-roots when marking terminates.
    StopAllHandshake,
    /// Per-mutator scans; every local load during a cycle records its target.
    LoadBarrier,
    /// Per-mutator scans; every `delArc(a, b)` during a cycle records `b`.
    DeleteBarrier,
    /// Per-mutator scans and nothing else. Unsafe; exists to exhibit the race.
    Unprotected,
}

keyword_enum!(RootScan, "root scan", {
    StopAllHandshake => ["handshake", "stopallhandshake", "stop-all-handshake"],
    LoadBarrier => ["load", "loadbarrier", "load-barrier"],
    DeleteBarrier => ["delete", "deletebarrier", "delete-barrier"],
    Unprotected => ["unprotected", "none"],
});

/// Fine-step blackening guard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlackenGuard {
    /// Re-examine every current slot before blackening.
    Recheck,
    /// Blacken once the cursor has passed the last slot.
    CursorOnly,
    /// Blacken only if no successor is black or gray, literally.
    AsPrinted,
}

keyword_enum!(BlackenGuard, "blacken guard", {
    Recheck => ["recheck"],
    CursorOnly => ["cursor", "cursor-only", "naive"],
    AsPrinted => ["as-printed", "literal"],
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollectorConfig {
    pub variant: Variant,
    pub barrier: Barrier,
    pub granularity: Granularity,
    pub gray_policy: GrayPolicy,
    pub card_count: usize,
    pub root_scan: RootScan,
    pub blacken_guard: BlackenGuard,
    /// Dirty nodes moved to gray before each marking step; 0 disables.
    pub interim_drain: usize,
}

impl CollectorConfig {
    /// Defaults for a variant: Dijkstra barrier for the incremental-update
    /// variants, Yuasa for snapshot, none for stop-the-world.
    pub fn new(variant: Variant) -> Self {
        let barrier = match variant {
            Variant::StopTheWorld => Barrier::None,
            Variant::Snapshot => Barrier::Yuasa,
            Variant::Workset | Variant::DirtySet | Variant::DirtyCards => Barrier::Dijkstra,
        };
        CollectorConfig {
            variant,
            barrier,
            granularity: Granularity::Coarse,
            gray_policy: GrayPolicy::StackDfs,
            card_count: if variant == Variant::DirtyCards { 4 } else { 1 },
            root_scan: RootScan::StopAllHandshake,
            blacken_guard: BlackenGuard::Recheck,
            interim_drain: 0,
        }
    }

    pub fn with_barrier(mut self, barrier: Barrier) -> Self {
        self.barrier = barrier;
        self
    }

    pub fn with_granularity(mut self, g: Granularity) -> Self {
        self.granularity = g;
        self
    }

    pub fn with_gray_policy(mut self, p: GrayPolicy) -> Self {
        self.gray_policy = p;
        self
    }

    pub fn with_root_scan(mut self, r: RootScan) -> Self {
        self.root_scan = r;
        self
    }

    pub fn with_cards(mut self, k: usize) -> Self {
        self.card_count = k;
        self
    }

    /// Applies the forced settings: stop-the-world runs without barriers
    /// and scans roots with the world stopped; card count is at least 1.
    pub fn normalized(mut self) -> Self {
        if self.variant == Variant::StopTheWorld {
            self.barrier = Barrier::None;
            self.root_scan = RootScan::StopAllHandshake;
        }
        self.card_count = self.card_count.max(1);
        self
    }

    /// Short `variant/barrier/granularity/policy/rootscan` label.
    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}/{}/{}",
            self.variant, self.barrier, self.granularity, self.gray_policy, self.root_scan
        )
    }
}

impl Default for CollectorConfig {
    fn default() -> Self {
        CollectorConfig::new(Variant::Workset)
    }
}
