//! Counter-based random streams: one independent stream per
//! `(seed, block, replicate)` triple, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for replicate `replicate` of block `block` under `seed`.
/// Blocks separate independent copies (e.g. a field and its resampled twin).
pub fn replicate_rng(seed: u64, block: u64, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ splitmix(block.wrapping_add(0x5151));
    for chunk in key.chunks_mut(8) {
        state = splitmix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng
}
