//! Networks trained by hand-written backpropagation: dense layers, an LSTM
//! sequence autoencoder, Adam, and the chunked external-encoder adapter.

mod adam;
mod autoencoder;
mod external;
mod lstm;
mod mlp;

#[cfg(test)]
mod gradcheck;

pub use adam::Adam;
pub use autoencoder::{
    train_autoencoder, unlabeled_segments, AeArch, Autoencoder, DenseAeArch, Encoder, LstmAeArch, TrainConfig,
    TrainedAutoencoder, PBNN_MAGIC, PBNN_VERSION, SEGMENT_LEN,
};
pub use external::{external_segment_features, ChunkEncoder, SpectralStubEncoder, EXTERNAL_CHUNK, EXTERNAL_DIM};
pub use lstm::{LstmAeCache, LstmAeGrad, LstmAutoencoder, LstmCell, LstmGrad};
pub use mlp::{grad_slices, mse_loss, softmax, softmax_cross_entropy, Activation, Dense, DenseGrad, Mlp, MlpCache};
