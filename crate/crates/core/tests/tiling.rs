//! Tiled execution against monolithic execution, receptive ranges against
//! dependency tracing, and the memory planner on the reference fixtures.

mod common;

use common::{random_model, random_window, reference_conv_stack, rng, traced_outputs, RandomArch};
use rand::Rng;
use smartpam::fixture::{gen_fixture, Arch, WeightMode};
use smartpam::nn::{conv_stack_forward, model_forward};
use smartpam::tiler::{
    make_tile_plan, peak_activation_bytes, smallest_slice_count_within, stack_receptive_range,
    tiled_conv_stack, tiled_forward, IndexRange,
};
use smartpam::{Error, PlanarTensor};

const TILING_ARCH: RandomArch = RandomArch {
    max_layers: 6,
    max_channels: 8,
    max_kernel: 4,
    max_stride: 3,
    max_dilation: 4,
    max_window: 2048,
};

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn tiled_equals_monolithic_for_every_slice_count() {
    let mut r = rng(0x7113);
    let mut slice_counts_checked = 0;
    for case in 0..200 {
        let model = random_model(&mut r, &TILING_ARCH, false);
        let window = PlanarTensor::mono(random_window(&mut r, model.window_samples));
        let mono_features = conv_stack_forward(&window, &model.conv_layers).unwrap();
        let mono = model_forward(&window, &model).unwrap();
        let final_length = model.final_length().unwrap();
        for n in 1..=final_length {
            let plan = make_tile_plan(&model, n).unwrap();
            let features = tiled_conv_stack(&window, &model, &plan).unwrap();
            assert_eq!(
                bits(features.values()),
                bits(mono_features.values()),
                "case {case}, {n} slices"
            );
            slice_counts_checked += 1;
        }
        // the full classifier shares the feature path; spot-check it end to end
        for n in [1, final_length.div_ceil(2), final_length] {
            let plan = make_tile_plan(&model, n).unwrap();
            let tiled = tiled_forward(&window, &model, &plan).unwrap();
            assert_eq!(bits(&tiled.probabilities), bits(&mono.probabilities));
            assert_eq!(tiled.class_index, mono.class_index);
        }
        assert!(matches!(
            make_tile_plan(&model, final_length + 1),
            Err(Error::InvalidSliceCount { .. })
        ));
        assert!(matches!(
            make_tile_plan(&model, 0),
            Err(Error::InvalidSliceCount { .. })
        ));
    }
    assert!(slice_counts_checked >= 200);
}

#[test]
fn receptive_range_matches_dependency_tracing() {
    let arch = RandomArch {
        max_layers: 4,
        max_channels: 3,
        max_kernel: 4,
        max_stride: 3,
        max_dilation: 3,
        max_window: 96,
    };
    let mut r = rng(0xf1e1d);
    for case in 0..60 {
        let model = random_model(&mut r, &arch, true);
        // strictly positive input and weights keep every ReLU in its linear region
        let window: Vec<f64> = (0..model.window_samples)
            .map(|_| r.gen_range(0.5..=1.5))
            .collect();
        let final_length = reference_conv_stack(&model, &window)[0].len();

        // inputs each output depends on, by perturbing one sample at a time
        let mut deps: Vec<Vec<usize>> = vec![Vec::new(); final_length];
        for p in 0..model.window_samples {
            for o in traced_outputs(&model, &window, p) {
                deps[o].push(p);
            }
        }
        for (o, d) in deps.iter().enumerate() {
            let want = IndexRange::new(*d.first().unwrap(), *d.last().unwrap());
            let got = stack_receptive_range(IndexRange::new(o, o), &model.conv_layers);
            assert_eq!(got, want, "case {case}, output {o}");
        }

        // the range of a contiguous output block is the hull of its members
        let a = r.gen_range(0..final_length);
        let b = r.gen_range(a..final_length);
        let block = stack_receptive_range(IndexRange::new(a, b), &model.conv_layers);
        let lo = stack_receptive_range(IndexRange::new(a, a), &model.conv_layers);
        let hi = stack_receptive_range(IndexRange::new(b, b), &model.conv_layers);
        assert_eq!(block, IndexRange::new(lo.start, hi.end));
    }
}

#[test]
fn slices_partition_the_output() {
    let mut r = rng(0x9a27);
    for _ in 0..100 {
        let model = random_model(&mut r, &TILING_ARCH, false);
        let final_length = model.final_length().unwrap();
        let n = r.gen_range(1..=final_length);
        let plan = make_tile_plan(&model, n).unwrap();
        assert_eq!(plan.slices.len(), n);
        let mut next = 0;
        let lens: Vec<usize> = plan.slices.iter().map(|s| s.out_range.len()).collect();
        for s in &plan.slices {
            assert_eq!(s.out_range.start, next);
            next = s.out_range.end + 1;
            assert!(s.in_range.end < model.window_samples);
            assert_eq!(
                s.in_range,
                stack_receptive_range(s.out_range, &model.conv_layers)
            );
        }
        assert_eq!(next, final_length);
        // near-equal, remainder first
        assert!(lens.windows(2).all(|w| w[0] >= w[1]));
        assert!(lens[0] - lens[n - 1] <= 1);
    }
}

#[test]
fn plans_are_deterministic() {
    let model = gen_fixture(&Arch::Small, 3, WeightMode::RandomUniform);
    for n in [1, 2, 5, 33] {
        assert_eq!(
            make_tile_plan(&model, n).unwrap(),
            make_tile_plan(&model, n).unwrap()
        );
    }
}

#[test]
fn small_fixture_plan_of_five() {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let plan = make_tile_plan(&model, 5).unwrap();
    let shown: Vec<String> = plan
        .slices
        .iter()
        .map(|s| format!("{} <- {}", s.out_range, s.in_range))
        .collect();
    assert_eq!(
        shown,
        [
            "[0,6] <- [0,318]",
            "[7,13] <- [189,507]",
            "[14,20] <- [378,696]",
            "[21,26] <- [567,858]",
            "[27,32] <- [729,1020]",
        ]
    );
}

#[test]
fn memory_peaks_on_reference_fixtures() {
    let small = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let untiled = peak_activation_bytes(&small, None).unwrap().peak_bytes;
    let tiled = peak_activation_bytes(&small, Some(&make_tile_plan(&small, 5).unwrap()))
        .unwrap()
        .peak_bytes;
    assert_eq!(untiled, 21696);
    assert_eq!(tiled, 7184);
    assert!(tiled * 3 <= untiled);

    let large = gen_fixture(&Arch::Large, 0, WeightMode::Zero);
    assert!(peak_activation_bytes(&large, None).unwrap().peak_bytes > 256_000);
}

#[test]
fn tiled_peak_never_grows_with_more_slices_on_fixtures() {
    for arch in [Arch::Small, Arch::Large] {
        let model = gen_fixture(&arch, 0, WeightMode::Zero);
        let final_length = model.final_length().unwrap();
        let peaks: Vec<usize> = (1..=final_length)
            .map(|n| {
                let plan = make_tile_plan(&model, n).unwrap();
                peak_activation_bytes(&model, Some(&plan))
                    .unwrap()
                    .peak_bytes
            })
            .collect();
        // near-equal splits are monotone up to the ragged remainder of one slice
        let per_position = peaks[0] / final_length;
        for w in peaks.windows(2) {
            assert!(w[1] <= w[0] + per_position, "{arch:?}: {w:?}");
        }
        assert!(peaks[final_length - 1] < peaks[0]);
    }
}

#[test]
fn budget_search_picks_the_smallest_count() {
    let model = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let (plan, report) = smallest_slice_count_within(&model, 10_000)
        .unwrap()
        .unwrap();
    assert_eq!(plan.n_slices, 3);
    assert_eq!(report.peak_bytes, 9488);
    let two = make_tile_plan(&model, 2).unwrap();
    assert!(
        peak_activation_bytes(&model, Some(&two))
            .unwrap()
            .peak_bytes
            > 10_000
    );
    assert!(smallest_slice_count_within(&model, 100).unwrap().is_none());
}

#[test]
fn stale_plan_is_rejected() {
    let small = gen_fixture(&Arch::Small, 0, WeightMode::Zero);
    let plan = make_tile_plan(&small, 4).unwrap();
    let mut other = small.clone();
    other.conv_layers[0].dilation = 2;
    let window = PlanarTensor::mono(vec![0.0; other.window_samples]);
    assert!(matches!(
        tiled_forward(&window, &other, &plan),
        Err(Error::StalePlan(_))
    ));
}
