// Save and reload a model, a WAV clip and a device profile.
//
// cargo run -p smartpam --example model_file

use smartpam::config::{load_profile, save_profile};
use smartpam::fixture::{gen_fixture, pattern_stream, Arch, WeightMode};
use smartpam::model_file::{load_model, save_model};
use smartpam::wav::{read_wav, write_wav};
use smartpam::{DeviceProfile, Error};

pub fn run_example() -> smartpam::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;

    let model = gen_fixture(&Arch::Large, 1, WeightMode::RandomUniform);
    let model_path = dir.path().join("large.pam");
    save_model(&model_path, &model)?;
    let size = std::fs::metadata(&model_path)
        .map_err(|e| Error::io(&model_path, e))?
        .len();
    let reloaded = load_model(&model_path)?;
    println!(
        "model: {size} bytes on disk, reload identical: {}",
        reloaded == model
    );

    let detector = gen_fixture(&Arch::Small, 0, WeightMode::CraftedDetector);
    let wav_path = dir.path().join("calls.wav");
    let stream = pattern_stream(&detector, &[("noise", 5), ("male", 5)]);
    write_wav(&wav_path, &stream)?;
    let clip = read_wav(&wav_path)?;
    println!(
        "wav: {} samples at {} Hz, {}-bit mono, identical: {}",
        clip.stream.samples.len(),
        clip.sample_rate_hz,
        clip.bits_per_sample,
        clip.stream == stream
    );

    let profile_path = dir.path().join("profile.toml");
    save_profile(&profile_path, &DeviceProfile::default())?;
    println!(
        "profile reload identical: {}",
        load_profile(&profile_path)? == DeviceProfile::default()
    );

    // a flipped weight byte is caught by the checksum
    let mut bytes = std::fs::read(&model_path).map_err(|e| Error::io(&model_path, e))?;
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&model_path, &bytes).map_err(|e| Error::io(&model_path, e))?;
    println!("after a bit flip: {}", load_model(&model_path).unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> smartpam::Result<()> {
    run_example()
}
