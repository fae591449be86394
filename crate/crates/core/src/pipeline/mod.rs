//! Camera-to-plan stream pipeline.
//!
//! One extraction worker per camera publishes decoded frames into a
//! latest-only [`FrameSlot`]; inference workers take the newest frame of
//! each slot and run a [`Detector`] on it; the [`Pipeline`] control loop
//! gathers detections for a window, aggregates them into a queue state,
//! runs the optimizer and records how long each stage took.

pub mod aggregate;
pub mod clock;
pub mod detector;
pub mod ledger;
pub mod orchestrator;
pub mod slot;
pub mod source;

pub use aggregate::{Aggregate, AggregationWindow, Aggregator, StalePolicy};
pub use clock::{PipelineClock, StopSignal};
pub use detector::{
    run_inference_worker, DetectError, Detection, Detector, DetectorSpec, InferenceEvent,
    InferenceReport, ReplayDetector, SyntheticDetector,
};
pub use ledger::{CycleLatency, LatencyLedger, LatencySummary};
pub use orchestrator::{
    CameraSpec, CycleOutcome, EmittedPlan, Pipeline, PipelineReport, PipelineSettings,
    PipelineSpec, SkipReason,
};
pub use slot::{check_freshness, BufferGauge, Doorbell, FrameSlot, Sequenced, SlotEvent, SlotStats};
pub use source::{
    run_extraction_worker, CameraState, CameraStatus, ExtractionReport, Frame, FrameSource,
    Packet, ReplaySource, SceneSpec, SourceError, SourceSpec, SyntheticSource,
};
