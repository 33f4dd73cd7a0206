//! Interference alignment by pairing channel states over finite-field and Rayleigh-fading
//! interference channels.
//!
//! The crate covers GF(q) arithmetic and the complementary-channel map,
//! channel-state and noise samplers, typicality tests on state sequences,
//! the pairing scheduler, linear computation codes with the end-to-end
//! protocol, and rate-region and Monte Carlo rate evaluation.

pub mod analysis;
pub mod channels;
pub mod codec;
pub mod error;
pub mod finite_field;
pub mod rng;
pub mod scheduler;
pub mod typicality;

pub use analysis::{
    db_to_linear, equivalent_form, gauss_achievable, gauss_outer_bound, gauss_paired_rate, gauss_rates,
    region_contains, sweep_figure, timeshare_split, Estimate, GaussRateResult, PairBound, RateRegion, SweepRow,
    SWEEP_HEADER,
};
pub use channels::{
    ff_states, gauss_states, noise_entropy, sample_cn, sample_ff_noise, sample_ff_state, sample_gauss_state,
    ChannelConfig, ChannelState, ComplexMatrix, FiniteFieldNoiseModel, GaussianChannelConfig, ModelKind, StatePayload,
};
pub use codec::{
    decode_function, min_channel_uses, run_protocol, simulate_protocol, Decoder, LinearCode, ProtocolConfig,
    ProtocolReport, ProtocolRun, RateLosses, UserReport,
};
pub use error::{Error, Result};
pub use finite_field::{complement_matrix, FieldElement, FieldMatrix, PrimeField};
pub use rng::{SeedSequence, Stream};
pub use scheduler::{
    build_pairing, effective_snr, gauss_complement, quantize, sample_matched_pair, GridPoint, PairingMode, PairingPlan,
    PairingSummary, QuantizedMatrix, Quantizer, Role, SlotPlan,
};
pub use typicality::{
    count_types, is_delta_typical, lemma1_bound, ExplicitLaw, QuantizedGaussianLaw, StateKey, StateLaw, TypeCount,
    UniformFieldLaw,
};
