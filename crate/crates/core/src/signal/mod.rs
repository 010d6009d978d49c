//! Monte Carlo sideband synthesis and spectrum-analyser emulation.

mod electronics;
pub mod rng;
mod spectrum;
mod synth;
mod trace;

pub use electronics::{add_electronics_noise, electronics_correct, floor_rel_noiseless};
pub use spectrum::{
    estimate_psd, spectra_to_csv, tone_snr, AnalyzerSettings, PowerSpectrum, SnlReference,
    SpectrumEstimate, FLOOR_SPAN_BINS,
};
pub use synth::{
    next_fast_len, synthesize_traces, CrossSpectralModel, EprSpectrum, FlatSpectrum,
    SynthesisParams,
};
pub use trace::TimeTrace;

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
