use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmpc_core::agreement::fault_bound;
use qmpc_core::circuit::GateOp;
use qmpc_core::field::{Fe, Field};
use qmpc_core::hw_mpc::{gate_rounds, import, mpc_linear, mpc_run, multiply, ChildInput, MpcError, MpcSession, Shared};
use qmpc_core::poly::Polynomial;
use qmpc_core::rng::Streams;
use qmpc_core::sharing::Bivariate;
use qmpc_core::simnet::{AdversaryStrategy, Behavior, Network};

fn network(p: u64, players: usize, bad: &[usize], b: Behavior, seed: u64) -> Network {
    let mut net = Network::new(Field::new(p).unwrap(), players, false, false);
    net.attach_adversary(AdversaryStrategy::new(bad.iter().copied().collect(), b, seed)).unwrap();
    net
}

fn deal(members: &[usize], v: Fe, rng: &mut ChaCha8Rng) -> Shared {
    let t = fault_bound(members.len());
    let f = Polynomial::random_with_constant(v, t, rng);
    Shared::from_bivariate(members, &Bivariate::with_sharing(&f, t, rng))
}

fn good(net: &Network, members: &[usize]) -> Vec<usize> {
    (0..members.len()).filter(|&i| !net.is_bad(members[i])).collect()
}

#[test]
fn multiply_small_example() {
    let f = Field::new(101).unwrap();
    let members = [0, 1, 2, 3];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = network(101, 4, &[], Behavior::Honest, 0);
    let mut streams = Streams::new(1, 4);
    let s = MpcSession::new(&net, members.to_vec()).unwrap();
    let a = deal(&members, f.elem(6), &mut rng);
    let b = deal(&members, f.elem(7), &mut rng);
    let z = deal(&members, f.zero(), &mut rng);
    let out = multiply(&mut net, &s, &mut streams, &[(&a, &b), (&z, &b)]).unwrap();
    assert_eq!(out[0].reveal_with(&[0, 1, 2, 3]).unwrap(), f.elem(42));
    assert_eq!(out[1].reveal_with(&[0, 1, 2, 3]).unwrap(), f.zero());
    assert!(out.iter().all(|o| o.rows().iter().all(|r| r.degree() <= 1)));
}

#[test]
fn multiply_under_every_behavior() {
    let f = Field::new(101).unwrap();
    for q in [4usize, 7] {
        let t = fault_bound(q);
        let members: Vec<usize> = (0..q).collect();
        for b in Behavior::CATALOG {
            for seed in 0..10u64 {
                let bad: Vec<usize> = (0..t).map(|i| (i * 2 + seed as usize) % q).collect();
                let mut net = network(101, q, &bad, b, seed);
                let mut streams = Streams::new(seed, q);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = MpcSession::new(&net, members.clone()).unwrap();
                let (x, y) = (f.sample(&mut rng), f.sample(&mut rng));
                let a = deal(&members, x, &mut rng);
                let c = deal(&members, y, &mut rng);
                let out = multiply(&mut net, &s, &mut streams, &[(&a, &c)]).unwrap();
                let g = good(&net, &members);
                assert_eq!(out[0].reveal_with(&g).unwrap(), x * y, "q={q} {b} seed={seed}");
            }
        }
    }
}

#[test]
fn multiply_chain_matches_plain_product() {
    let f = Field::new(101).unwrap();
    let members: Vec<usize> = (0..7).collect();
    let mut net = network(101, 7, &[2, 5], Behavior::TargetedShareCorruption, 3);
    let mut streams = Streams::new(3, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = MpcSession::new(&net, members.clone()).unwrap();
    let mut want = f.one();
    let mut acc = deal(&members, f.one(), &mut rng);
    for _ in 0..5 {
        let v = f.sample(&mut rng);
        want *= v;
        let x = deal(&members, v, &mut rng);
        acc = multiply(&mut net, &s, &mut streams, &[(&acc, &x)]).unwrap().remove(0);
    }
    assert_eq!(acc.reveal_with(&good(&net, &members)).unwrap(), want);
}

#[test]
fn linear_examples() {
    let f = Field::new(101).unwrap();
    let members = [0, 1, 2, 3];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = deal(&members, f.elem(3), &mut rng);
    let b = deal(&members, f.elem(5), &mut rng);
    let all = [0, 1, 2, 3];
    assert_eq!(mpc_linear(&[f.one()], &[&a], f.zero()).unwrap(), a);
    assert_eq!(mpc_linear(&[f.one(), f.one()], &[&a, &b], f.zero()).unwrap().reveal_with(&all).unwrap(), f.elem(8));
    // unmasking: s - r with public s
    let s = f.elem(40);
    assert_eq!(mpc_linear(&[-f.one()], &[&b], s).unwrap().reveal_with(&all).unwrap(), f.elem(35));
}

#[test]
fn import_corrects_lying_holders() {
    let f = Field::new(101).unwrap();
    // source quorum 0..7 with two bad holders, session 4..11 with two bad
    let src: Vec<usize> = (0..7).collect();
    let dst: Vec<usize> = (4..11).collect();
    for b in Behavior::CATALOG {
        for seed in 0..5 {
            let mut net = network(101, 11, &[1, 5], b, seed);
            let mut streams = Streams::new(seed, 11);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = f.sample(&mut rng);
            let shared = deal(&src, v, &mut rng);
            let s = MpcSession::new(&net, dst.clone()).unwrap();
            let got = import(&mut net, &s, &mut streams, &[&shared, &shared]).unwrap();
            let g = good(&net, &dst);
            assert_eq!(got[0].reveal_with(&g).unwrap(), v, "{b} seed={seed}");
            assert_eq!(got[1].reveal_with(&g).unwrap(), v);
        }
    }
}

#[test]
fn session_refuses_third_bad() {
    let net = network(101, 6, &[0, 1], Behavior::Silent, 0);
    assert!(matches!(MpcSession::new(&net, (0..6).collect()), Err(MpcError::ThresholdViolated { bad: 2, roles: 6 })));
    assert!(matches!(MpcSession::new(&net, vec![2, 3, 4]), Err(MpcError::TooFewRoles(3))));
}

fn child<'a>(s: Fe, r: &'a Shared) -> ChildInput<'a> {
    ChildInput { masked: vec![s; r.members().len()], mask: r }
}

#[test]
fn add_gate_example_p7() {
    let f = Field::new(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (q1, q2, qg) = (vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![1, 3, 5, 7]);
    // O_1 = 3 and O_2 = 5 under masks 4 and 6, r_g = 2
    let r1 = deal(&q1, f.elem(4), &mut rng);
    let r2 = deal(&q2, f.elem(6), &mut rng);
    let rg = deal(&qg, f.elem(2), &mut rng);
    let mut net = network(7, 8, &[], Behavior::Honest, 0);
    let mut streams = Streams::new(0, 8);
    let s = MpcSession::new(&net, qg.clone()).unwrap();
    let start = net.round();
    let out = mpc_run(&mut net, &s, &mut streams, &GateOp::Add, &[child(f.elem(0), &r1), child(f.elem(4), &r2)], &rg).unwrap();
    assert_eq!(net.round() - start, gate_rounds(4));
    assert!(out.masked.iter().all(|v| *v == Some(f.elem(3))));
}

#[test]
fn gates_survive_lying_roles() {
    let f = Field::new(101).unwrap();
    let q = 7;
    let children: Vec<Vec<usize>> = vec![(0..7).collect(), (3..10).collect()];
    let qg: Vec<usize> = (5..12).collect();
    for op in [GateOp::Add, GateOp::Mul, GateOp::CMul(9)] {
        for b in Behavior::CATALOG {
            for seed in 0..6u64 {
                // bad players: 1, 6, 9 (two per quorum at most)
                let mut net = network(101, 12, &[1, 6, 9], b, seed);
                let mut streams = Streams::new(seed, 12);
                let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
                let vals: Vec<Fe> = (0..2).map(|_| f.sample(&mut rng)).collect();
                let masks: Vec<Fe> = (0..2).map(|_| f.sample(&mut rng)).collect();
                let rs: Vec<Shared> = children.iter().zip(&masks).map(|(m, r)| deal(m, *r, &mut rng)).collect();
                let rgv = f.sample(&mut rng);
                let rg = deal(&qg, rgv, &mut rng);
                // bad holders claim a wrong masked value
                let inputs: Vec<ChildInput> = (0..2)
                    .map(|c| {
                        let mut masked = vec![vals[c] + masks[c]; q];
                        for (k, &p) in children[c].iter().enumerate() {
                            if net.is_bad(p) {
                                masked[k] = masked[k] + f.one();
                            }
                        }
                        ChildInput { masked, mask: &rs[c] }
                    })
                    .collect();
                let s = MpcSession::new(&net, qg.clone()).unwrap();
                let used = if matches!(op, GateOp::CMul(_)) { &inputs[..1] } else { &inputs[..] };
                let out = mpc_run(&mut net, &s, &mut streams, &op, used, &rg).unwrap();
                let fv = match op {
                    GateOp::Add => vals[0] + vals[1],
                    GateOp::Mul => vals[0] * vals[1],
                    GateOp::CMul(c) => f.elem(c) * vals[0],
                };
                for i in good(&net, &qg) {
                    assert_eq!(out.masked[i], Some(fv + rgv), "{op:?} {b} seed={seed}");
                }
            }
        }
    }
}
