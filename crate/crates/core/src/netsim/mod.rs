//! Packet-level discrete-event simulation of senders and FIFO-queue links.
//!
//! Links serve packets at a fixed rate, hold at most `queue_size` packets
//! and drop independently with probability `loss_rate`. Acknowledgements
//! travel back along the reversed route paying propagation delay only.
//! A drop is reported to the sender at the moment its acknowledgement
//! would have arrived.

mod link;
mod network;
mod report;

pub use link::{DropCause, LinkSpec, LinkState, Packet, ScheduleResult};
pub use network::{
    make_network, Network, SenderState, SimEvent, MI_DURATION_MAX, MI_DURATION_MIN, RATE_FLOOR,
};
pub use report::{mi_stats, MiReport, MiStats};
