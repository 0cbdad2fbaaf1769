//! Class transitions of the center window along a trajectory.

use serde::{Deserialize, Serialize};

use crate::windows::WindowKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub class: WindowKind,
}

/// Time-ordered class changes of one replica's center window. The first
/// entry is the class at time 0; consecutive entries differ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceLog {
    pub replica: u64,
    pub l: usize,
    pub horizon: f64,
    pub transitions: Vec<Transition>,
    /// Time at which the whole lattice froze, if it did.
    pub absorbed_at: Option<f64>,
}

impl RecurrenceLog {
    pub fn new(replica: u64, l: usize, initial: WindowKind) -> Self {
        Self {
            replica,
            l,
            horizon: 0.0,
            transitions: vec![Transition {
                time: 0.0,
                class: initial,
            }],
            absorbed_at: None,
        }
    }

    pub fn current(&self) -> WindowKind {
        self.transitions.last().expect("log starts with the initial class").class
    }

    pub fn observe(&mut self, time: f64, class: WindowKind) {
        if class != self.current() {
            self.transitions.push(Transition { time, class });
        }
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed_at.is_some()
    }

    /// Number of entries into each class (the initial class counts as one).
    pub fn visits(&self) -> [usize; 7] {
        let mut v = [0; 7];
        for t in &self.transitions {
            v[t.class as usize] += 1;
        }
        v
    }

    /// Time spent in each class up to the horizon.
    pub fn occupation(&self) -> [f64; 7] {
        let mut occ = [0.0; 7];
        for (k, t) in self.transitions.iter().enumerate() {
            let end = self.transitions.get(k + 1).map_or(self.horizon, |n| n.time);
            occ[t.class as usize] += end - t.time;
        }
        occ
    }

    pub fn visited(&self, class: WindowKind) -> bool {
        self.transitions.iter().any(|t| t.class == class)
    }

    pub fn visited_stripe(&self) -> bool {
        self.transitions.iter().any(|t| t.class.is_stripe())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassVisits {
    pub class: WindowKind,
    pub visits: usize,
    pub occupation: f64,
    /// Fraction of replicas with at least one visit.
    pub replica_fraction: f64,
    /// Same, over replicas that never froze.
    pub active_replica_fraction: f64,
}

/// A proportion with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Proportion {
    pub hits: usize,
    pub n: usize,
    pub fraction: f64,
    pub stderr: f64,
}

impl Proportion {
    pub fn new(hits: usize, n: usize) -> Self {
        let fraction = if n == 0 { f64::NAN } else { hits as f64 / n as f64 };
        let stderr = if n == 0 {
            f64::NAN
        } else {
            (fraction * (1.0 - fraction) / n as f64).sqrt()
        };
        Self {
            hits,
            n,
            fraction,
            stderr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceSummary {
    pub n_replicas: usize,
    pub n_absorbed: usize,
    pub per_class: Vec<ClassVisits>,
    /// Replicas whose window was constant +1 and constant −1 at some times.
    pub both_constants: Proportion,
    pub both_constants_active: Proportion,
    pub stripe: Proportion,
    pub stripe_active: Proportion,
    pub single_step: Proportion,
    pub single_step_active: Proportion,
}

pub fn recurrence_summary(logs: &[RecurrenceLog]) -> RecurrenceSummary {
    let active: Vec<&RecurrenceLog> = logs.iter().filter(|l| !l.is_absorbed()).collect();
    let count = |set: &[&RecurrenceLog], f: &dyn Fn(&RecurrenceLog) -> bool| {
        Proportion::new(set.iter().filter(|l| f(l)).count(), set.len())
    };
    let all: Vec<&RecurrenceLog> = logs.iter().collect();
    let per_class = WindowKind::ALL
        .iter()
        .map(|&class| {
            let visits = logs.iter().map(|l| l.visits()[class as usize]).sum();
            let occupation = logs.iter().map(|l| l.occupation()[class as usize]).sum();
            ClassVisits {
                class,
                visits,
                occupation,
                replica_fraction: count(&all, &|l| l.visited(class)).fraction,
                active_replica_fraction: count(&active, &|l| l.visited(class)).fraction,
            }
        })
        .collect();
    let both = |l: &RecurrenceLog| l.visited(WindowKind::ConstantPlus) && l.visited(WindowKind::ConstantMinus);
    let stripe = |l: &RecurrenceLog| l.visited_stripe();
    let step = |l: &RecurrenceLog| l.visited(WindowKind::SingleStepWall);
    RecurrenceSummary {
        n_replicas: logs.len(),
        n_absorbed: logs.len() - active.len(),
        per_class,
        both_constants: count(&all, &both),
        both_constants_active: count(&active, &both),
        stripe: count(&all, &stripe),
        stripe_active: count(&active, &stripe),
        single_step: count(&all, &step),
        single_step_active: count(&active, &step),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_zero_has_one_class() {
        let log = RecurrenceLog::new(0, 2, WindowKind::Other);
        assert_eq!(log.transitions.len(), 1);
        assert_eq!(log.occupation().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn occupation_partitions_the_horizon() {
        let mut log = RecurrenceLog::new(3, 2, WindowKind::ProvenEAbsent);
        log.observe(0.5, WindowKind::ProvenEAbsent);
        log.observe(1.5, WindowKind::ConstantPlus);
        log.observe(4.0, WindowKind::StripeH);
        log.observe(6.0, WindowKind::ConstantPlus);
        log.horizon = 10.0;
        assert_eq!(log.transitions.len(), 4);
        let occ = log.occupation();
        assert_eq!(occ.iter().sum::<f64>(), 10.0);
        assert_eq!(occ[WindowKind::ConstantPlus as usize], 2.5 + 4.0);
        assert_eq!(log.visits()[WindowKind::ConstantPlus as usize], 2);
        let s = recurrence_summary(&[log]);
        assert_eq!(s.stripe.hits, 1);
        assert_eq!(s.both_constants.hits, 0);
    }
}
