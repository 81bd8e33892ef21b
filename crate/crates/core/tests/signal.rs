use ise_core::signal::synth::white_noise;
use ise_core::signal::{
    a_weighted_level, apply_ltass, band_levels, normalize_rms, octave_filterbank, rms, AudioBuffer,
    OctaveFilterbank, ShapingConfig, SpectrumProfile, OCTAVE_CENTERS,
};
use proptest::prelude::*;
use std::f64::consts::{PI, SQRT_2};

const FS: u32 = 44_100;

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn sine_at_1k_passes_own_band_and_is_rejected_elsewhere() {
    let sine =
        AudioBuffer::from_fn(2 * FS as usize, FS, |t| 0.5 * (2.0 * PI * 1000.0 * t).sin()).unwrap();
    let bands = octave_filterbank(&sine).unwrap();
    // Skip the first 100 ms of filter start-up.
    let settle = FS as usize / 10;
    let input = power(&sine.samples()[settle..]);
    let own = power(&bands[3].samples()[settle..]);
    assert!(db(own / input).abs() <= 0.5, "{}", db(own / input));
    let four_k = power(&bands[5].samples()[settle..]);
    assert!(db(four_k / input) <= -30.0);
}

/// Oracle: integrate the summed band power responses against a flat density,
/// relative to the in-range span (lower edge of 125 Hz to upper edge of 8 kHz).
/// Returns (everything captured, captured from in-range frequencies only).
fn white_noise_capture_oracle(bank: &OctaveFilterbank, fs: f64) -> (f64, f64) {
    let lo = OCTAVE_CENTERS[0] / SQRT_2;
    let hi = OCTAVE_CENTERS[6] * SQRT_2;
    let steps = 200_000;
    let df = (fs / 2.0) / steps as f64;
    let (mut all, mut inside) = (0.0, 0.0);
    for i in 0..steps {
        let f = (i as f64 + 0.5) * df;
        let c = bank
            .bands()
            .iter()
            .map(|b| b.power_response(f))
            .sum::<f64>()
            * df;
        all += c;
        if (lo..hi).contains(&f) {
            inside += c;
        }
    }
    (all / (hi - lo), inside / (hi - lo))
}

#[test]
fn white_noise_band_power_sum() {
    let bank = OctaveFilterbank::new(FS).unwrap();
    let (expected, in_range_only) = white_noise_capture_oracle(&bank, FS as f64);
    let noise = white_noise(20 * FS as usize, FS, 0.1, 7).unwrap();
    let bands = bank.split(noise.samples());
    let total_in_range = power(noise.samples())
        * (OCTAVE_CENTERS[6] * SQRT_2 - OCTAVE_CENTERS[0] / SQRT_2)
        / (FS as f64 / 2.0);
    let measured: f64 = bands.iter().map(|b| power(b)).sum::<f64>() / total_in_range;
    // Adjacent bands cross at -3 dB, so in-range capture is close to unity; the
    // skirts outside the span add under 2 % on top.
    assert!(
        (0.6..=1.0).contains(&in_range_only),
        "oracle {in_range_only}"
    );
    assert!(
        expected - in_range_only < 0.02,
        "{expected} {in_range_only}"
    );
    assert!(
        (measured - expected).abs() < 0.02,
        "measured {measured} oracle {expected}"
    );
    assert!(measured >= 0.6);
}

#[test]
fn band_levels_follow_gain_law() {
    let noise = white_noise(5 * FS as usize, FS, 0.05, 3).unwrap();
    let a = band_levels(&noise).unwrap();
    let b = band_levels(&noise.scaled(2.0)).unwrap();
    for (x, y) in a.iter().zip(b.iter()) {
        let d = y.db().unwrap() - x.db().unwrap();
        assert!((d - 6.02).abs() < 0.1, "{d}");
    }
}

fn shape_error(profile: &SpectrumProfile, seed: u64) -> f64 {
    let noise = white_noise(20 * FS as usize, FS, 0.1, seed).unwrap();
    let shaped = apply_ltass(&noise, profile, &ShapingConfig::default()).unwrap();
    assert!((rms(&shaped).unwrap() / rms(&noise).unwrap() - 1.0).abs() < 1e-9);
    let levels = band_levels(&shaped).unwrap();
    let diffs: Vec<f64> = levels
        .iter()
        .zip(OCTAVE_CENTERS)
        .map(|(l, fc)| l.db().unwrap() - profile.level_at(fc))
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max)
}

#[test]
fn ltass_shaping_tracks_default_profile() {
    let err = shape_error(&SpectrumProfile::default_male(), 11);
    assert!(err <= 1.5, "max deviation {err} dB");
}

#[test]
fn flat_profile_gives_flat_bands() {
    let err = shape_error(&SpectrumProfile::flat(), 12);
    assert!(err <= 1.5, "max deviation {err} dB");
}

#[test]
fn ltass_shaping_tracks_a_tilted_third_octave_profile() {
    // Third-octave profile rising 3 dB/octave to 1 kHz, then falling 9 dB/octave.
    let bands: Vec<(f64, f64)> = (0..=20)
        .map(|i| {
            let f = 100.0 * 2f64.powf(i as f64 / 3.0);
            let oct = (f / 1000.0).log2();
            (f, if oct < 0.0 { 3.0 * oct } else { -9.0 * oct })
        })
        .collect();
    let err = shape_error(&SpectrumProfile::new(bands).unwrap(), 13);
    assert!(err <= 1.5, "max deviation {err} dB");
}

fn short_noise() -> impl Strategy<Value = AudioBuffer> {
    (any::<u64>(), 0.001f64..0.5)
        .prop_map(|(seed, level)| white_noise(FS as usize / 4, FS, level, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rms_is_linear_in_gain(buf in short_noise(), g in 1e-3f64..1e3) {
        let a = rms(&buf).unwrap();
        let b = rms(&buf.scaled(g)).unwrap();
        prop_assert!((b / (g * a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_is_idempotent(buf in short_noise(), target in 1e-3f64..1.0) {
        let once = normalize_rms(&buf, target).unwrap();
        let twice = normalize_rms(&once, target).unwrap();
        for (a, b) in once.samples().iter().zip(twice.samples()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
        prop_assert!((rms(&once).unwrap() / target - 1.0).abs() < 1e-6);
    }

    #[test]
    fn a_level_gain_law(buf in short_noise(), g in 0.01f64..100.0) {
        let a = a_weighted_level(&buf, 94.0).unwrap().db().unwrap();
        let b = a_weighted_level(&buf.scaled(g), 94.0).unwrap().db().unwrap();
        prop_assert!((b - a - 20.0 * g.log10()).abs() < 0.01);
    }

    #[test]
    fn band_power_never_exceeds_input(buf in short_noise(), f in 50.0f64..15_000.0) {
        let tone = AudioBuffer::from_fn(FS as usize / 4, FS, |t| (2.0 * PI * f * t).sin()).unwrap();
        for input in [&buf, &tone] {
            let total = power(input.samples());
            for band in octave_filterbank(input).unwrap() {
                prop_assert!(db(power(band.samples()) / total) <= 0.5);
            }
        }
    }
}
