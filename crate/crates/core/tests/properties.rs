mod common;

use std::io::Cursor;

use codec_eval::metrics::{
    content_features, mse, psnr_from_mse, sequence_quality, ssim_plane, wpsnr, MetricSelection,
    SsimParams,
};
use codec_eval::profile::{
    aggregate_stages, merge_costs, parse_callgrind, time_factor, FunctionCost, StageMapping,
    TimingRecord,
};
use codec_eval::rd::{bd_quality, bd_rate, validate_curve, RdCurve, RdPoint};
use codec_eval::subjective::{
    anova_groups, ci95_of, mos_of, pearson, screen_subjects, spearman, ScoreMatrix, Stimulus,
};
use codec_eval::video::{
    Chroma, FrameBuffer, FrameSource, MemorySource, PlaneId, Rational, SequenceInfo, Y4mReader,
    Y4mWriter,
};
use common::*;
use proptest::prelude::*;

fn plane_pair(max: u16) -> impl Strategy<Value = (Vec<u16>, Vec<u16>)> {
    (1usize..200).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..=max, n),
            prop::collection::vec(0..=max, n),
        )
    })
}

fn sized_plane_pair() -> impl Strategy<Value = (usize, usize, Vec<u16>, Vec<u16>)> {
    (11usize..24, 11usize..20).prop_flat_map(|(w, h)| {
        (
            Just(w),
            Just(h),
            prop::collection::vec(0u16..=255, w * h),
            prop::collection::vec(0u16..=255, w * h),
        )
    })
}

/// Strictly increasing (rate, quality) pairs.
fn rd_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (
        100.0f64..5000.0,
        25.0f64..35.0,
        prop::collection::vec((1.1f64..2.5, 0.3f64..5.0), 3..7),
    )
        .prop_map(|(r0, q0, steps)| {
            let mut pts = vec![(r0, q0)];
            for (ratio, dq) in steps {
                let (r, q) = *pts.last().unwrap();
                pts.push((r * ratio, q + dq));
            }
            pts
        })
}

fn curve(codec: &str, pts: &[(f64, f64)]) -> RdCurve {
    let points = pts
        .iter()
        .enumerate()
        .map(|(i, &(r, q))| RdPoint::new(r, q, format!("p{i}")))
        .collect();
    validate_curve(codec, "seq", "PSNR", points).unwrap()
}

fn frames(info: SequenceInfo, seeds: &[u64]) -> Vec<FrameBuffer> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| random_frame(&mut rng(s), info, i as u64))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mse_is_symmetric((a, b) in plane_pair(1023)) {
        prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
    }

    #[test]
    fn psnr_decreases_with_mse(m1 in 1e-6f64..1e5, factor in 1.0001f64..100.0, depth in prop::sample::select(vec![8u8, 10])) {
        prop_assert!(psnr_from_mse(m1, depth) > psnr_from_mse(m1 * factor, depth));
    }

    #[test]
    fn wpsnr_symmetric_in_chroma(y in 10.0f64..100.0, u in 10.0f64..100.0, v in 10.0f64..100.0) {
        prop_assert_eq!(wpsnr(y, u, v), wpsnr(y, v, u));
        if (y - u).abs() > 1e-9 {
            prop_assert!((wpsnr(y, u, v) - wpsnr(u, y, v)).abs() > 1e-12);
        }
    }

    #[test]
    fn ssim_identity_and_symmetry((w, h, a, b) in sized_plane_pair()) {
        let p = SsimParams::default();
        let same = ssim_plane(&a, &a, w, h, 8, &p).unwrap();
        prop_assert!((same - 1.0).abs() <= 1e-12);
        let ab = ssim_plane(&a, &b, w, h, 8, &p).unwrap();
        let ba = ssim_plane(&b, &a, w, h, 8, &p).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab <= 1.0 + 1e-12);
    }

    #[test]
    fn si_ti_ignore_appended_duplicates(seeds in prop::collection::vec(any::<u64>(), 2..5), extra in 1usize..3) {
        let inf = info(12, 10, 8);
        let base = frames(inf, &seeds);
        let mut longer = base.clone();
        let last = base.last().unwrap().clone();
        for k in 0..extra {
            let planes = last.clone().into_planes();
            longer.push(FrameBuffer::new(inf, planes, (base.len() + k) as u64).unwrap());
        }
        let a = content_features(&mut MemorySource::new(inf, base)).unwrap();
        let b = content_features(&mut MemorySource::new(inf, longer)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sequence_quality_independent_of_parallelism(seeds in prop::collection::vec(any::<u64>(), 1..12)) {
        let inf = info(16, 12, 8);
        let refs = frames(inf, &seeds);
        let tests: Vec<_> = frames(inf, &seeds.iter().map(|s| s ^ 0x55).collect::<Vec<_>>());
        let run = |parallel: bool| {
            let sel = MetricSelection { parallel, ..MetricSelection::default() };
            sequence_quality(
                &mut MemorySource::new(inf, refs.clone()),
                &mut MemorySource::new(inf, tests.clone()),
                &sel,
                100.0,
            )
            .unwrap()
        };
        prop_assert_eq!(run(true), run(false));
    }

    #[test]
    fn y4m_round_trip(w in 1u32..9, h in 1u32..7, depth in prop::sample::select(vec![8u8, 10]),
                      chroma in prop::sample::select(vec![Chroma::C420, Chroma::C444]),
                      n in 1usize..4, seed in any::<u64>()) {
        let (w, h) = if chroma == Chroma::C420 { (w * 2, h * 2) } else { (w, h) };
        let inf = SequenceInfo::new(w, h, Rational::new(30000, 1001).unwrap(), depth, chroma, None).unwrap();
        let mut r = rng(seed);
        let original: Vec<_> = (0..n).map(|i| random_frame(&mut r, inf, i as u64)).collect();
        let mut writer = Y4mWriter::new(Vec::new(), inf).unwrap();
        for f in &original {
            writer.write_frame(f).unwrap();
        }
        let bytes = writer.into_inner();
        let mut reader = Y4mReader::new(Cursor::new(bytes)).unwrap();
        prop_assert_eq!(reader.info(), &inf);
        let mut back = Vec::new();
        while let Some(f) = reader.read_frame().unwrap() {
            back.push(f);
        }
        prop_assert_eq!(back, original);
    }

    #[test]
    fn bd_self_delta_is_zero(pts in rd_points()) {
        let c = curve("a", &pts);
        prop_assert!(bd_rate(&c, &c).unwrap().percent.abs() < 1e-9);
        prop_assert!(bd_quality(&c, &c).unwrap().delta.abs() < 1e-9);
    }

    #[test]
    fn bd_rate_reciprocity_and_scale(pts in rd_points(), k in 0.3f64..3.0) {
        let a = curve("a", &pts);
        let scaled: Vec<_> = pts.iter().map(|&(r, q)| (r * k, q)).collect();
        let t = curve("t", &scaled);
        let ab = bd_rate(&a, &t).unwrap().percent;
        let ba = bd_rate(&t, &a).unwrap().percent;
        prop_assert!(((1.0 + ab / 100.0) * (1.0 + ba / 100.0) - 1.0).abs() < 1e-6);
        prop_assert!((ab - (k - 1.0) * 100.0).abs() < 1e-6);
    }

    #[test]
    fn bd_rate_unit_invariance(a in rd_points(), b in rd_points()) {
        let (ca, cb) = (curve("a", &a), curve("b", &b));
        let bits = |p: &[(f64, f64)]| p.iter().map(|&(r, q)| (r * 1000.0, q)).collect::<Vec<_>>();
        if let Ok(kbps) = bd_rate(&ca, &cb) {
            let bps = bd_rate(&curve("a", &bits(&a)), &curve("b", &bits(&b))).unwrap();
            prop_assert!((kbps.percent - bps.percent).abs() < 1e-9 * kbps.percent.abs().max(1.0));
        }
    }

    #[test]
    fn rate_interpolant_fidelity_and_monotonicity(pts in rd_points()) {
        let c = curve("a", &pts);
        let f = c.rate_interpolant().unwrap();
        for p in c.points() {
            prop_assert!((f.eval(p.quality) - p.bitrate_kbps.log10()).abs() < 1e-9);
        }
        let (lo, hi) = f.domain();
        let mut prev = f.eval(lo);
        for i in 1..=1000 {
            let v = f.eval(lo + (hi - lo) * i as f64 / 1000.0);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn correlations_invariant_to_increasing_maps(
        xy in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..30),
        scale in 0.1f64..10.0, shift in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let (Ok(p), Ok(s)) = (pearson(&x, &y), spearman(&x, &y)) {
            let affine: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((pearson(&affine, &y).unwrap() - p).abs() < 1e-9);
            let cubed: Vec<f64> = x.iter().map(|v| (v + 1.0).powi(3)).collect();
            prop_assert!((spearman(&cubed, &y).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn mos_ci_subject_permutation_and_scaling(
        scores in prop::collection::vec(20.0f64..80.0, 2..40),
        c in 0.1f64..1.2,
        rotate in 0usize..40,
    ) {
        let mut permuted = scores.clone();
        permuted.rotate_left(rotate % scores.len());
        permuted.reverse();
        let m = mos_of(&scores).unwrap();
        prop_assert!((mos_of(&permuted).unwrap() - m).abs() < 1e-9);
        let ci = ci95_of(&scores, 1.95).unwrap();
        prop_assert!((ci95_of(&permuted, 1.95).unwrap() - ci).abs() < 1e-9);
        let stretched: Vec<f64> = scores.iter().map(|s| m + c * (s - m)).collect();
        prop_assert!((ci95_of(&stretched, 1.95).unwrap() - c * ci).abs() < 1e-9);
    }

    #[test]
    fn screening_is_idempotent(seed in any::<u64>(), reversed in 0usize..10) {
        let rows = synthetic_panel(8, Some(reversed), seed);
        let matrix = ScoreMatrix::new(
            (0..10).map(|i| format!("s{i}")).collect(),
            (0..8).map(|j| Stimulus::new(format!("p{j}"))).collect(),
            rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        ).unwrap();
        let (first, kept) = screen_subjects(&matrix, 0.75).unwrap();
        prop_assert_eq!(first.discarded_subjects().collect::<Vec<_>>(), vec![format!("s{reversed}")]);
        let (second, again) = screen_subjects(&kept, 0.75).unwrap();
        prop_assert_eq!(second.discarded, 0);
        prop_assert!(second.subjects.iter().all(|s| s.min_correlation() >= 0.75));
        prop_assert_eq!(again, kept);
    }

    #[test]
    fn anova_duplicated_groups(obs in prop::collection::vec(0.0f64..100.0, 2..10), k in 2usize..5) {
        let groups: Vec<_> = (0..k).map(|i| (format!("g{i}"), obs.clone())).collect();
        let r = anova_groups("x", &groups).unwrap();
        prop_assert!(r.f.abs() < 1e-9);
        prop_assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn anova_two_groups_is_t_squared(
        a in prop::collection::vec(0.0f64..100.0, 2..10),
        b in prop::collection::vec(0.0f64..100.0, 2..10),
    ) {
        let groups = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
        if let Ok(r) = anova_groups("x", &groups) {
            let t = t_statistic(&a, &b);
            prop_assert!((r.f - t * t).abs() < 1e-9 * (1.0 + r.f));
        }
    }

    #[test]
    fn time_factor_fps_representation(wall in 0.1f64..1e5, frames in 1u64..10_000, k in 1u64..10) {
        let a = TimingRecord::new("c", "s", 32, wall, frames, Rational::new(50, 1).unwrap()).unwrap();
        let b = TimingRecord::new("c", "s", 32, wall, frames, Rational::new(50 * k, k).unwrap()).unwrap();
        prop_assert_eq!(time_factor(&a).unwrap(), time_factor(&b).unwrap());
    }

    #[test]
    fn callgrind_block_order_is_irrelevant(
        blocks in prop::collection::vec(prop::collection::vec(0u64..10_000, 1..4), 1..6)
            .prop_flat_map(|b| Just(b.clone()).prop_shuffle().prop_map(move |s| (b.clone(), s)))
    ) {
        // Function names are derived from the cost values so shuffled
        // blocks keep their identity.
        let render = |bs: &[Vec<u64>]| {
            let mut text = String::from("events: Ir\n");
            for costs in bs {
                text.push_str(&format!("fn=f{}\n", costs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_")));
                for (i, c) in costs.iter().enumerate() {
                    text.push_str(&format!("{} {c}\n", i + 1));
                }
            }
            text
        };
        let (original, shuffled) = blocks;
        let mut a = parse_callgrind(render(&original).as_bytes(), None).unwrap().functions;
        let mut b = parse_callgrind(render(&shuffled).as_bytes(), None).unwrap().functions;
        a.sort_by(|x, y| x.name.cmp(&y.name));
        b.sort_by(|x, y| x.name.cmp(&y.name));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn callgrind_split_across_files(costs in prop::collection::vec(1u64..10_000, 2..8), cut in 1usize..7) {
        let cut = cut.min(costs.len() - 1);
        let lines = |cs: &[u64]| cs.iter().map(|c| format!("1 {c}\n")).collect::<String>();
        let whole = format!("events: Ir\nfn=encSearch\n{}fn=main\n1 5\n", lines(&costs));
        let first = format!("events: Ir\nfn=encSearch\n{}", lines(&costs[..cut]));
        let second = format!("events: Ir\nfn=main\n1 5\nfn=encSearch\n{}", lines(&costs[cut..]));
        let parse = |t: &str| parse_callgrind(t.as_bytes(), None).unwrap().functions;
        let (p1, p2) = (parse(&first), parse(&second));
        let merged = merge_costs([p1.as_slice(), p2.as_slice()]);
        let mapping = StageMapping::parse("encSearch -> ME\n").unwrap();
        let a = aggregate_stages(&parse(&whole), &mapping, 1.0).unwrap();
        let b = aggregate_stages(&merged, &mapping, 1.0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stage_percentages_sum_to_100(
        costs in prop::collection::vec((0usize..12, 0u64..1_000_000), 1..40),
        threshold in 0.0f64..20.0,
    ) {
        let functions: Vec<FunctionCost> = costs
            .iter()
            .enumerate()
            .map(|(i, &(stage, c))| FunctionCost { name: format!("s{stage}_fn{i}"), self_cost: c })
            .collect();
        prop_assume!(functions.iter().any(|f| f.self_cost > 0));
        let rules: String = (0..10).map(|s| format!("^s{s}_ -> Stage{s}\n")).collect();
        let mapping = StageMapping::parse(&rules).unwrap();
        let p = aggregate_stages(&functions, &mapping, threshold).unwrap();
        let total: f64 = p.stages.iter().map(|s| s.percent).sum();
        prop_assert!((total - 100.0).abs() <= 0.01);
        for s in p.stages.iter().filter(|s| s.stage != "Other") {
            prop_assert!(s.percent >= threshold);
        }
        let catch_all = aggregate_stages(&functions, &StageMapping::parse(". -> All\n").unwrap(), threshold).unwrap();
        prop_assert_eq!(catch_all.stages.len(), 1);
        prop_assert_eq!(catch_all.stages[0].percent, 100.0);
    }
}

#[test]
fn plane_ids_cover_all_planes() {
    let inf = info(4, 4, 8);
    let f = random_frame(&mut rng(1), inf, 0);
    let total: usize = PlaneId::ALL.iter().map(|&p| f.plane(p).len()).sum();
    assert_eq!(total, 16 + 4 + 4);
}
