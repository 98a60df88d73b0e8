//! Directly-follows counts and the predecessor/successor neighbourhood of a
//! single activity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::event_log::{EventLog, END_LABEL, START_LABEL};

/// A node of the directly-follows graph: an activity or one of the two
/// artificial boundary nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Start,
    Activity(String),
    End,
}

impl Node {
    pub fn activity(label: impl Into<String>) -> Self {
        Node::Activity(label.into())
    }

    pub fn as_str(&self) -> &str {
        match self {
            Node::Start => START_LABEL,
            Node::End => END_LABEL,
            Node::Activity(a) => a,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Node {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            START_LABEL => Node::Start,
            END_LABEL => Node::End,
            other => Node::Activity(other.to_owned()),
        })
    }
}

impl From<&str> for Node {
    fn from(s: &str) -> Self {
        s.parse().unwrap()
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Node::from(s.as_str()))
    }
}

pub type Dfg = BTreeMap<(Node, Node), usize>;

/// Counts every adjacent pair of each case, plus `(START, first)` and
/// `(last, END)`.
pub fn build_dfg(log: &EventLog) -> Result<Dfg> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut dfg = Dfg::new();
    for case in log.cases() {
        let mut prev = Node::Start;
        for activity in case.activities() {
            let next = Node::activity(activity);
            *dfg.entry((prev, next.clone())).or_default() += 1;
            prev = next;
        }
        *dfg.entry((prev, Node::End)).or_default() += 1;
    }
    Ok(dfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityContext {
    pub activity: String,
    pub predecessors: BTreeMap<Node, usize>,
    pub successors: BTreeMap<Node, usize>,
    pub total_in: usize,
    pub total_out: usize,
}

impl ActivityContext {
    pub fn neighbours(&self, direction: Direction) -> &BTreeMap<Node, usize> {
        match direction {
            Direction::In => &self.predecessors,
            Direction::Out => &self.successors,
        }
    }

    pub fn total(&self, direction: Direction) -> usize {
        match direction {
            Direction::In => self.total_in,
            Direction::Out => self.total_out,
        }
    }

    /// Neighbours by count descending, ties by label.
    pub fn ranked(&self, direction: Direction) -> Vec<(&Node, usize)> {
        let mut ranked: Vec<_> = self.neighbours(direction).iter().map(|(n, c)| (n, *c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked
    }

    /// The `k` most frequent neighbours.
    pub fn top_k(&self, direction: Direction, k: usize) -> BTreeSet<Node> {
        self.ranked(direction)
            .into_iter()
            .take(k)
            .map(|(n, _)| n.clone())
            .collect()
    }
}

pub fn activity_context(dfg: &Dfg, activity: &str) -> Result<ActivityContext> {
    let node = Node::activity(activity);
    let mut predecessors = BTreeMap::new();
    let mut successors = BTreeMap::new();
    for ((from, to), &count) in dfg {
        if *to == node {
            *predecessors.entry(from.clone()).or_insert(0) += count;
        }
        if *from == node {
            *successors.entry(to.clone()).or_insert(0) += count;
        }
    }
    if predecessors.is_empty() && successors.is_empty() {
        return Err(Error::UnknownActivity(activity.to_owned()));
    }
    Ok(ActivityContext {
        activity: activity.to_owned(),
        total_in: predecessors.values().sum(),
        total_out: successors.values().sum(),
        predecessors,
        successors,
    })
}

/// Share of the transitions in `direction` whose neighbour is in `valid`.
pub fn coverage(context: &ActivityContext, valid: &BTreeSet<Node>, direction: Direction) -> Result<f64> {
    if valid.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    let total = context.total(direction);
    if total == 0 {
        let side = match direction {
            Direction::In => "incoming",
            Direction::Out => "outgoing",
        };
        return Err(Error::ZeroTotal(context.activity.clone(), side));
    }
    let hit: usize = context
        .neighbours(direction)
        .iter()
        .filter(|(n, _)| valid.contains(*n))
        .map(|(_, c)| c)
        .sum();
    Ok(hit as f64 / total as f64)
}

pub fn render_context(context: &ActivityContext) -> String {
    let mut out = String::new();
    for (title, direction) in [("predecessors", Direction::In), ("successors", Direction::Out)] {
        let total = context.total(direction);
        out.push_str(&format!("# {title} of {} (total {total})\n", context.activity));
        out.push_str("rank\tcount\tshare\tcumulative\tlabel\n");
        let mut cumulative = 0;
        for (i, (node, count)) in context.ranked(direction).into_iter().enumerate() {
            cumulative += count;
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{}\n",
                i + 1,
                count,
                count as f64 / total as f64,
                cumulative as f64 / total as f64,
                node
            ));
        }
    }
    out
}
