use crate::model::ModelError;
use crate::propagator::PropagatorError;
use crate::reference::ReferenceError;
use crate::trajectory::TrajectoryError;
use crate::verify::VerifyError;
use crate::wavepacket::PacketError;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}
