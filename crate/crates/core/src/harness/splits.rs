use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from, stream};

/// One member/nonmember partition of the base set, with the member set sharded across clients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub split_index: usize,
    /// Sorted.
    pub member_ids: Vec<usize>,
    /// Sorted.
    pub nonmember_ids: Vec<usize>,
    /// Each shard sorted; shard sizes differ by at most one.
    pub client_shards: Vec<Vec<usize>>,
}

impl SplitPlan {
    pub fn is_member(&self, id: usize) -> bool {
        self.member_ids.binary_search(&id).is_ok()
    }
}

/// Number of members drawn from `base_size` samples at `member_fraction`.
pub fn member_count(base_size: usize, member_fraction: f64) -> usize {
    (base_size as f64 * member_fraction).round() as usize
}

/// `num_splits` independent uniform partitions of `0..base_size`.
pub fn make_splits(
    base_size: usize,
    num_splits: usize,
    member_fraction: f64,
    num_clients: usize,
    seed: u64,
) -> Result<Vec<SplitPlan>> {
    if num_splits < 2 {
        return Err(Error::InfeasibleSplit("need at least 2 splits".into()));
    }
    if num_clients == 0 {
        return Err(Error::InfeasibleSplit("need at least one client".into()));
    }
    if base_size < 2 * num_clients {
        return Err(Error::InfeasibleSplit(format!("base set of {base_size} is too small for {num_clients} clients")));
    }
    if !(member_fraction > 0.0 && member_fraction < 1.0) {
        return Err(Error::InfeasibleSplit("member_fraction must lie in (0, 1)".into()));
    }
    let members = member_count(base_size, member_fraction);
    if members < num_clients || members >= base_size {
        return Err(Error::InfeasibleSplit(format!(
            "{members} members out of {base_size} cannot feed {num_clients} clients and leave nonmembers"
        )));
    }

    let plans = (0..num_splits)
        .map(|split_index| {
            let mut rng = rng_from(derive_seed(seed, &[stream::SPLIT, split_index as u64]));
            let mut order: Vec<usize> = (0..base_size).collect();
            order.shuffle(&mut rng);
            let (member_part, nonmember_part) = order.split_at(members);

            let base = members / num_clients;
            let extra = members % num_clients;
            let mut client_shards = Vec::with_capacity(num_clients);
            let mut start = 0;
            for k in 0..num_clients {
                let len = base + usize::from(k < extra);
                let mut shard = member_part[start..start + len].to_vec();
                shard.sort_unstable();
                client_shards.push(shard);
                start += len;
            }

            let mut member_ids = member_part.to_vec();
            member_ids.sort_unstable();
            let mut nonmember_ids = nonmember_part.to_vec();
            nonmember_ids.sort_unstable();
            SplitPlan { split_index, member_ids, nonmember_ids, client_shards }
        })
        .collect();
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_partitions() {
        let plans = make_splits(100, 32, 0.5, 3, 42).unwrap();
        assert_eq!(plans.len(), 32);
        for (i, plan) in plans.iter().enumerate() {
            assert_eq!(plan.split_index, i);
            assert_eq!(plan.member_ids.len(), 50);
            let mut all: Vec<usize> = plan.member_ids.iter().chain(&plan.nonmember_ids).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..100).collect::<Vec<_>>());

            let sizes: Vec<usize> = plan.client_shards.iter().map(Vec::len).collect();
            assert_eq!(sizes, vec![17, 17, 16]);
            let mut sharded: Vec<usize> = plan.client_shards.concat();
            sharded.sort_unstable();
            assert_eq!(sharded, plan.member_ids);
        }
        assert_ne!(plans[0].member_ids, plans[1].member_ids);
    }

    #[test]
    fn seeded() {
        assert_eq!(make_splits(40, 4, 0.5, 2, 1).unwrap(), make_splits(40, 4, 0.5, 2, 1).unwrap());
        assert_ne!(make_splits(40, 4, 0.5, 2, 1).unwrap(), make_splits(40, 4, 0.5, 2, 2).unwrap());
    }

    #[test]
    fn infeasible_requests() {
        assert!(make_splits(40, 1, 0.5, 2, 0).is_err());
        assert!(make_splits(5, 4, 0.5, 3, 0).is_err());
        assert!(make_splits(40, 4, 1.0, 2, 0).is_err());
        assert!(make_splits(10, 4, 0.1, 4, 0).is_err());
    }

    #[test]
    fn membership_lookup() {
        let plan = &make_splits(30, 2, 0.5, 1, 5).unwrap()[0];
        for &id in &plan.member_ids {
            assert!(plan.is_member(id));
        }
        for &id in &plan.nonmember_ids {
            assert!(!plan.is_member(id));
        }
    }
}
