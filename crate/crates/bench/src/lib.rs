pub use beamkit;
