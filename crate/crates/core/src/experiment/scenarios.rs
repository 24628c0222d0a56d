use super::{Domain, ExperimentConfig, RunSpec, TheoremSpec};
use crate::events::EventSpec;
use crate::kernels::CovarianceModel;
use crate::mc::{ConstantMode, Functional, TheoremId};

const SMOKE_REPLICATES: u64 = 10_000;
const FULL_REPLICATES: u64 = 100_000;
/// Ball events have ~500 coordinates each; fewer draws keep the full suite
/// within minutes.
const FULL_BALL_REPLICATES: u64 = 20_000;
/// Lattice spacing of every Bargmann–Fock scenario.
const BF_SPACING: f64 = 0.5;

struct Draft {
    name: String,
    model: CovarianceModel,
    domain: Domain,
    events: Vec<EventSpec>,
    theorem: TheoremSpec,
}

impl Draft {
    fn new(name: &str, model: CovarianceModel, domain: Domain, events: Vec<EventSpec>, id: TheoremId) -> Self {
        Self { name: name.into(), model, domain, events, theorem: TheoremSpec::new(id) }
    }

    fn with(mut self, f: impl FnOnce(&mut TheoremSpec)) -> Self {
        f(&mut self.theorem);
        self
    }

    fn finish(self, replicates: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            name: self.name,
            model: self.model,
            domain: self.domain,
            events: self.events,
            theorem: self.theorem,
            run: RunSpec { replicates, seed, workers: None, output_dir: None, snapshot: false },
        }
    }
}

fn above(sites: &[usize], level: f64) -> EventSpec {
    EventSpec::AllAbove { sites: sites.to_vec(), level }
}

fn iid(len: usize) -> (CovarianceModel, Domain) {
    (CovarianceModel::IidStandard, Domain::Index { len })
}

fn explicit(matrix: &[&[f64]]) -> (CovarianceModel, Domain) {
    let m: Vec<Vec<f64>> = matrix.iter().map(|r| r.to_vec()).collect();
    let len = m.len();
    (CovarianceModel::ExplicitMatrix { matrix: m }, Domain::Index { len })
}

/// `X = (Z, Z)`
fn rank_one() -> (CovarianceModel, Domain) {
    explicit(&[&[1.0, 1.0], &[1.0, 1.0]])
}

fn draft(name: &str, (model, domain): (CovarianceModel, Domain), events: Vec<EventSpec>, id: TheoremId) -> Draft {
    Draft::new(name, model, domain, events, id)
}

fn bf_grid(shape: [usize; 2]) -> (CovarianceModel, Domain) {
    (CovarianceModel::BargmannFock, Domain::Grid { shape: shape.to_vec(), spacing: BF_SPACING })
}

fn crossing(shape: [usize; 2], origin: [usize; 2], side: usize) -> EventSpec {
    EventSpec::BoxCrossing { grid: shape.to_vec(), origin: origin.to_vec(), extent: vec![side, side], axis: 0, level: 0.0 }
}

fn block_sites(shape: [usize; 2], origin: [usize; 2], side: usize) -> Vec<usize> {
    let mut v = Vec::new();
    for x in origin[0]..origin[0] + side {
        for y in origin[1]..origin[1] + side {
            v.push(x * shape[1] + y);
        }
    }
    v
}

/// Two 8×8 crossing boxes with centres 16 sites apart on a 32² grid.
fn bf_crossing_pair() -> ((CovarianceModel, Domain), Vec<EventSpec>) {
    let s = [32, 32];
    (bf_grid(s), vec![crossing(s, [4, 12], 8), crossing(s, [20, 12], 8)])
}

/// Two 4×4 crossing boxes with 4 empty columns between them; `ρ ≈ 0.29`.
fn bf_close_pair() -> ((CovarianceModel, Domain), Vec<EventSpec>) {
    let s = [16, 8];
    (bf_grid(s), vec![crossing(s, [2, 2], 4), crossing(s, [10, 2], 4)])
}

/// `AllAbove` on two 2×2 blocks a few sites apart.
fn bf_all_above_pair() -> ((CovarianceModel, Domain), Vec<EventSpec>) {
    let s = [12, 6];
    (bf_grid(s), vec![above(&block_sites(s, [2, 2], 2), 0.0), above(&block_sites(s, [6, 2], 2), 0.0)])
}

/// Free field in `Z³` on two balls, each event "some site above 3".
fn gff_balls(radius: f64, offset: i64) -> ((CovarianceModel, Domain), Vec<EventSpec>) {
    let domain = Domain::Balls { centers: vec![vec![0, 0, 0], vec![offset, 0, 0]], radius };
    let half = domain.len() / 2;
    let events = vec![
        EventSpec::AnyAbove { sites: (0..half).collect(), level: 3.0 },
        EventSpec::AnyAbove { sites: (half..2 * half).collect(), level: 3.0 },
    ];
    ((CovarianceModel::Gff { dim: 3 }, domain), events)
}

/// Two 6×6 crossing blocks whose nearest sites are `gap_sites` apart.
fn bf_finite_range_pair(gap_sites: usize) -> ((CovarianceModel, Domain), Vec<EventSpec>) {
    let s = [3 + 6 + gap_sites - 1 + 6 + 3, 12];
    let second = 3 + 6 - 1 + gap_sites;
    (bf_grid(s), vec![crossing(s, [3, 3], 6), crossing(s, [second, 3], 6)])
}

fn independent_pair() -> Vec<EventSpec> {
    vec![above(&[0, 1], 0.0), EventSpec::AnyAbove { sites: vec![2, 3], level: 1.0 }]
}

fn interp_matrix() -> (CovarianceModel, Domain) {
    explicit(&[&[1.0, 0.5, 0.3], &[0.5, 1.0, 0.4], &[0.3, 0.4, 1.0]])
}

fn interp(name: &str, f: Functional, g: Functional) -> Draft {
    draft(name, interp_matrix(), vec![], TheoremId::Interpolation).with(|t| {
        t.functionals = vec![f, g];
        t.t_nodes = Some(32);
    })
}

/// One config per theorem id, `10⁴` replicates each.
pub fn smoke_suite() -> Vec<ExperimentConfig> {
    let (bf, bf_ev) = bf_crossing_pair();
    let (close, close_ev) = bf_close_pair();
    let (aa, aa_ev) = bf_all_above_pair();
    let (fr, fr_ev) = bf_finite_range_pair(16);
    let s = [12, 12];
    let drafts = vec![
        draft("smoke-thm1.1", bf, bf_ev, TheoremId::Sprinkled).with(|t| t.eps = Some(0.5)),
        draft("smoke-thm1.7", gff_balls(2.0, 6).0, gff_balls(2.0, 6).1, TheoremId::OneSided).with(|t| t.eps = Some(0.5)),
        draft("smoke-thm1.10", close, close_ev, TheoremId::Errorless).with(|t| {
            t.delta1 = Some(0.5);
            t.delta2 = Some(0.25);
        }),
        draft("smoke-prop1.8", fr, fr_ev, TheoremId::FiniteRange).with(|t| {
            t.radius = Some(3.0);
            t.eps = Some(1.0);
        }),
        draft("smoke-prop2.2", aa, aa_ev, TheoremId::ThresholdCov),
        draft("smoke-cor2.6", bf_grid(s), vec![crossing(s, [2, 2], 8)], TheoremId::Isoperimetric).with(|t| t.eps = Some(0.3)),
        draft("smoke-cor2.7", gff_balls(2.0, 6).0, gff_balls(2.0, 6).1, TheoremId::NoiseStability),
        draft(
            "smoke-hoeffding",
            explicit(&[&[1.0, 0.6], &[0.6, 1.0]]),
            vec![above(&[0], 0.3), above(&[1], -0.2)],
            TheoremId::Hoeffding,
        ),
        draft("smoke-positive-association", rank_one(), vec![above(&[0], 1.0), above(&[1], 1.0)], TheoremId::PositiveAssociation),
        interp("smoke-interpolation", Functional::MaxOfTwo { first: 0, second: 1 }, Functional::Coordinate { index: 2 }),
    ];
    drafts.into_iter().enumerate().map(|(k, d)| d.finish(SMOKE_REPLICATES, 1000 + k as u64)).collect()
}

/// Three example classes per theorem id; `10⁵` replicates except on the
/// free-field balls.
pub fn full_suite() -> Vec<ExperimentConfig> {
    let n = FULL_REPLICATES;
    let mut out: Vec<(Draft, u64)> = Vec::new();
    let mut add = |d: Draft| out.push((d, n));

    // sprinkled decoupling
    add(draft("thm1.1-iid", iid(4), independent_pair(), TheoremId::Sprinkled).with(|t| t.eps = Some(0.5)));
    for mode in [ConstantMode::Proof36, ConstantMode::Positive1] {
        let name = format!("thm1.1-rank-one-{}", mode.as_str());
        add(draft(&name, rank_one(), vec![above(&[0], 0.5), above(&[1], 0.5)], TheoremId::Sprinkled).with(|t| {
            t.eps = Some(0.5);
            t.constant_mode = Some(mode);
        }));
    }
    for mode in [ConstantMode::Proof36, ConstantMode::Positive1] {
        for eps in [0.25, 0.5, 1.0] {
            let (m, ev) = bf_crossing_pair();
            let name = format!("thm1.1-bf-eps{eps}-{}", mode.as_str());
            add(draft(&name, m, ev, TheoremId::Sprinkled).with(|t| {
                t.eps = Some(eps);
                t.constant_mode = Some(mode);
            }));
        }
    }

    // threshold covariance
    add(draft("prop2.2-iid", iid(4), independent_pair(), TheoremId::ThresholdCov));
    add(draft("prop2.2-rank-one", rank_one(), vec![above(&[0], 0.0), above(&[1], 0.0)], TheoremId::ThresholdCov));
    let (aa, aa_ev) = bf_all_above_pair();
    add(draft("prop2.2-bf", aa, aa_ev, TheoremId::ThresholdCov));

    // Hoeffding
    add(draft("hoeffding-iid", iid(2), vec![above(&[0], 0.0), above(&[1], 0.0)], TheoremId::Hoeffding));
    add(draft("hoeffding-rank-one", rank_one(), vec![above(&[0], 0.0), above(&[1], 0.0)], TheoremId::Hoeffding));
    add(draft(
        "hoeffding-explicit",
        explicit(&[&[1.0, 0.6], &[0.6, 1.0]]),
        vec![above(&[0], 0.3), above(&[1], -0.2)],
        TheoremId::Hoeffding,
    ));

    // positive association
    add(draft("positive-association-iid", iid(4), independent_pair(), TheoremId::PositiveAssociation));
    add(draft(
        "positive-association-rank-one",
        rank_one(),
        vec![above(&[0], 1.0), above(&[1], 1.0)],
        TheoremId::PositiveAssociation,
    ));
    add(draft(
        "positive-association-negated",
        explicit(&[&[1.0, -1.0], &[-1.0, 1.0]]),
        vec![above(&[0], 1.0), above(&[1], 1.0)],
        TheoremId::PositiveAssociation,
    ));

    // interpolation
    add(interp("interpolation-linear", Functional::Coordinate { index: 0 }, Functional::Coordinate { index: 2 }));
    add(interp("interpolation-same", Functional::Coordinate { index: 0 }, Functional::Coordinate { index: 0 }));
    add(interp("interpolation-max", Functional::MaxOfTwo { first: 0, second: 1 }, Functional::Coordinate { index: 2 }));

    // one-sided
    add(draft("thm1.7-iid", iid(4), independent_pair(), TheoremId::OneSided).with(|t| t.eps = Some(0.5)));
    add(draft("thm1.7-rank-one", rank_one(), vec![above(&[0], 0.5), above(&[1], 0.5)], TheoremId::OneSided)
        .with(|t| t.eps = Some(1.0)));

    // errorless
    let errorless = |t: &mut TheoremSpec| {
        t.delta1 = Some(0.5);
        t.delta2 = Some(0.25);
    };
    add(draft("thm1.10-iid", iid(4), vec![above(&[0], 0.0), above(&[2], 0.0)], TheoremId::Errorless).with(errorless));
    add(draft("thm1.10-rank-one", rank_one(), vec![above(&[0], 0.0), above(&[1], 0.0)], TheoremId::Errorless)
        .with(errorless));
    let (close, close_ev) = bf_close_pair();
    add(draft("thm1.10-bf", close, close_ev, TheoremId::Errorless).with(errorless));

    // finite range
    let (far, far_ev) = bf_finite_range_pair(26);
    add(draft("prop1.8-large-radius", far, far_ev, TheoremId::FiniteRange).with(|t| {
        t.radius = Some(6.0);
        t.eps = Some(0.5);
    }));
    let (fr, fr_ev) = bf_finite_range_pair(16);
    add(draft("prop1.8-bf", fr, fr_ev, TheoremId::FiniteRange).with(|t| {
        t.radius = Some(3.0);
        t.eps = Some(1.0);
    }));

    // isoperimetric
    add(draft("cor2.6-half-space", iid(1), vec![above(&[0], 0.0)], TheoremId::Isoperimetric).with(|t| t.eps = Some(0.5)));
    add(draft("cor2.6-zero-eps", iid(1), vec![above(&[0], 0.0)], TheoremId::Isoperimetric).with(|t| t.eps = Some(0.0)));
    let s = [12, 12];
    add(draft("cor2.6-bf", bf_grid(s), vec![crossing(s, [2, 2], 8)], TheoremId::Isoperimetric).with(|t| t.eps = Some(0.3)));

    // noise stability
    add(draft("cor2.7-iid", iid(4), independent_pair(), TheoremId::NoiseStability));
    add(draft("cor2.7-rank-one", rank_one(), vec![above(&[0], 0.5), above(&[1], 0.5)], TheoremId::NoiseStability));

    // free-field balls: radius 4, centres 12 apart
    let (gff, gff_ev) = gff_balls(4.0, 12);
    out.push((
        draft("thm1.7-gff-balls", gff.clone(), gff_ev.clone(), TheoremId::OneSided).with(|t| t.eps = Some(0.5)),
        FULL_BALL_REPLICATES,
    ));
    out.push((draft("cor2.7-gff-balls", gff, gff_ev, TheoremId::NoiseStability), FULL_BALL_REPLICATES));

    out.into_iter().enumerate().map(|(k, (d, n))| d.finish(n, 2000 + k as u64)).collect()
}
