//! Channel model ingredients: array responses, LoS matrices, spatial
//! correlation, path loss and assembled effective channels.

pub mod channel;
pub mod config;
pub mod correlation;
pub mod los;
pub mod pathloss;

pub use channel::{
    draw_rayleigh, effective_channel, multi_ris_channel, sample_rayleigh, ChannelRealization,
    DirectLink,
};
pub use config::{
    direction_angles, distance, Geometry, LinkBudget, PhaseVector, Point, SystemConfig,
};
pub use correlation::{correlation_matrix, AngularSpread, DEFAULT_SAMPLE_COUNT};
pub use los::{full_rank_los, rank_one_los, steering_vector, Angles};
pub use pathloss::{db_to_linear, linear_to_db, noise_power, pathloss_umi, PathGain};
