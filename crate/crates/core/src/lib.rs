//! Offline extraction of address text from natural-scene images and
//! resolution to GPS coordinates and regional languages.
//!
//! The pipeline runs entirely offline:
//!
//! 1. [`imgproc`] — brightness classification and the correction chain
//!    (gamma, non-local-means denoise, Wiener deblur).
//! 2. [`detect`] — decoding of per-pixel score/geometry maps into rotated
//!    text boxes plus locality-aware non-maximum suppression. The map
//!    producer is a pluggable [`detect::DetectorBackend`]; the reference
//!    backend loads precomputed maps from fixture files.
//! 3. [`segment`] — periodic box growth, Otsu binarization, convex-hull
//!    correction and color-image masking of the text region.
//! 4. [`seqnet`] — MaxOut convolutional features, a bidirectional LSTM and
//!    CTC decoding/loss, trainable at desk scale on a bundled toy font.
//! 5. [`lingua`] — script detection, dictionary translation and
//!    punctuation-free tokenization into location keywords.
//! 6. [`georesolve`] — gazetteer joins, tuple intersection, ambiguity
//!    resolution, reverse geocoding and regional-language lookup.
//! 7. [`pipeline`] — end-to-end orchestration with an EXIF-GPS
//!    short-circuit, batch CLI support and the evaluation harness.

pub mod detect;
pub mod georesolve;
pub mod imgproc;
pub mod lingua;
pub mod pipeline;
pub mod segment;
pub mod seqnet;
