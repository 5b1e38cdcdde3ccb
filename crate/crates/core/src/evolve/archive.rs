use serde::Serialize;

use super::Chromosome;
use crate::similarity::{jaccard, StatementSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissionReason {
    /// Highest-fitness individual of its generation.
    BestOfGeneration,
    /// Any other individual far enough from every member.
    Novel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Admission {
    pub generation: u32,
    pub id: u64,
    pub reason: AdmissionReason,
}

/// Collection of mutually dissimilar variants gathered across generations.
#[derive(Clone, Debug)]
pub struct Archive {
    threshold: f64,
    members: Vec<Chromosome>,
    admission_log: Vec<Admission>,
}

impl Archive {
    pub fn new(threshold: f64) -> Archive {
        Archive {
            threshold,
            members: Vec::new(),
            admission_log: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn members(&self) -> &[Chromosome] {
        &self.members
    }

    pub fn admission_log(&self) -> &[Admission] {
        &self.admission_log
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True when `set` is below the similarity threshold against every member.
    pub fn accepts(&self, set: &StatementSet) -> bool {
        self.members.iter().all(|m| {
            // Jaccard can never exceed the ratio of the set sizes.
            let (a, b) = (m.statements.len(), set.len());
            if (a.min(b) as f64) < self.threshold * a.max(b) as f64 {
                return true;
            }
            jaccard(&m.statements, set).is_ok_and(|j| j < self.threshold)
        })
    }

    /// Offers the generation's best individual first, then the rest in
    /// population order. Returns the number admitted.
    pub fn update(&mut self, generation: u32, pop: &[Chromosome], best: usize) -> usize {
        let order = std::iter::once(best).chain((0..pop.len()).filter(|&i| i != best));
        let mut admitted = 0;
        for i in order {
            let c = &pop[i];
            if self.accepts(&c.statements) {
                self.members.push(c.clone());
                self.admission_log.push(Admission {
                    generation,
                    id: c.id,
                    reason: if i == best {
                        AdmissionReason::BestOfGeneration
                    } else {
                        AdmissionReason::Novel
                    },
                });
                admitted += 1;
            }
        }
        admitted
    }
}
