use qmpc_core::agreement::{agree, broadcast_check, fault_bound, Checked};
use qmpc_core::field::Field;
use qmpc_core::simnet::{AdversaryStrategy, Behavior, MsgKind, Network};

fn network(players: usize, bad: &[usize], b: Behavior, seed: u64) -> Network {
    let mut net = Network::new(Field::new(101).unwrap(), players, false, false);
    net.attach_adversary(AdversaryStrategy::new(bad.iter().copied().collect(), b, seed)).unwrap();
    net
}

#[test]
fn agreement_and_validity_across_catalog() {
    for q in [4usize, 7, 10] {
        let f = fault_bound(q);
        for b in Behavior::CATALOG {
            for seed in 0..6u64 {
                let bad: Vec<usize> = (0..f).map(|i| (i * 3 + seed as usize) % q).collect();
                let good: Vec<usize> = (0..q).filter(|r| !bad.contains(r)).collect();
                let members: Vec<usize> = (0..q).collect();

                // split inputs: every good role decides the same value from {0, 1}
                let mut net = network(q, &bad, b, seed);
                let inputs: Vec<_> = (0..q).map(|r| vec![vec![((r as u64 + seed) % 2)], vec![7, r as u64 % 2]]).collect();
                let a = agree(&mut net, &members, &inputs);
                assert!(a.unanimous(good.iter().copied()), "q={q} {b} seed={seed}");
                let d = a.value(good[0], 0);
                assert!(d == [0] || d == [1], "q={q} {b} seed={seed} decided {d:?}");

                // unanimous good start
                let mut net = network(q, &bad, b, seed);
                let inputs: Vec<_> = (0..q).map(|_| vec![vec![42], vec![1, 2, 3]]).collect();
                let a = agree(&mut net, &members, &inputs);
                for &g in &good {
                    assert_eq!(a.value(g, 0), &[42]);
                    assert_eq!(a.value(g, 1), &[1, 2, 3]);
                }
            }
        }
    }
}

#[test]
fn exhaustive_good_splits_q4() {
    // every assignment of {0,1} to the three good roles, every bad position
    for bad in 0..4usize {
        for mask in 0..8u32 {
            for b in [Behavior::Equivocate, Behavior::Garbage, Behavior::Silent] {
                let mut net = network(4, &[bad], b, mask as u64);
                let good: Vec<usize> = (0..4).filter(|&r| r != bad).collect();
                let mut inputs = vec![vec![vec![0u64]]; 4];
                for (k, &g) in good.iter().enumerate() {
                    inputs[g][0] = vec![((mask >> k) & 1) as u64];
                }
                let a = agree(&mut net, &[0, 1, 2, 3], &inputs);
                assert!(a.unanimous(good.iter().copied()));
                let d = a.value(good[0], 0)[0];
                assert!(good.iter().any(|&g| inputs[g][0][0] == d) || mask == 0 || mask == 7);
                if mask == 0 || mask == 7 {
                    assert_eq!(d, (mask & 1) as u64);
                }
            }
        }
    }
}

#[test]
fn split_sender_is_inconsistent() {
    // the sender's copies to odd-numbered recipients are bumped: 9 to half, 10 to half
    for seed in 0..10 {
        let mut net = network(5, &[4], Behavior::InconsistentCommit, seed);
        let out = broadcast_check(&mut net, &[0, 1, 2, 3], MsgKind::Commit, &[4], &[vec![9]]);
        assert!(out.iter().all(|o| o[0] == Checked::InconsistentSender));
    }
}

#[test]
fn lying_verifiers_do_not_break_honest_sender() {
    for b in Behavior::CATALOG {
        for seed in 0..5 {
            let members: Vec<usize> = (0..7).collect();
            let mut net = network(8, &[1, 4], b, seed);
            let out = broadcast_check(&mut net, &members, MsgKind::Commit, &[7, 0], &[vec![9], vec![3, 3]]);
            for r in [0, 2, 3, 5, 6] {
                assert_eq!(out[r][0], Checked::Consistent(vec![9]), "{b}");
                assert_eq!(out[r][1], Checked::Consistent(vec![3, 3]), "{b}");
            }
        }
    }
}

#[test]
fn bad_sender_outcome_is_unanimous() {
    for b in Behavior::CATALOG {
        for seed in 0..5 {
            let members: Vec<usize> = (0..7).collect();
            let mut net = network(8, &[7, 3], b, seed);
            let out = broadcast_check(&mut net, &members, MsgKind::Commit, &[7], &[vec![9]]);
            let good = [0, 1, 2, 4, 5, 6];
            assert!(good.iter().all(|&g| out[g] == out[0]), "{b}");
        }
    }
}
