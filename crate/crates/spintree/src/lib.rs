//! Quantum state transfer over XY spin networks in the single-excitation
//! sector: binary-tree topologies, a three-step high-fidelity transfer
//! protocol (free evolution + local phase flips), its closed-form fidelity,
//! and singlet-link concatenation of trees into larger routing switches.

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod network;
pub mod protocol;

pub use analytic::{
    analytic_fidelity, analytic_infidelity, best_resonance, h4_eigensystem, phi_mod_2pi,
    resonance_params, symmetry_basis, transfer_amplitude, H4System, ResonancePoint, SymmetryBasis,
};
pub use dynamics::{
    full_space_evolve, overlap, sector_hamiltonian, ExcitationState, FullSpaceOracle,
    FullSpaceResult, SectorHamiltonian,
};
pub use error::{Error, Result};
pub use network::{
    attach_sender_aux, attach_singlet_link, build_binary_tree, build_bt2_with_aux,
    build_modified_bt2, concatenate_trees, NetworkSpec, NodeId, TreeWiring,
};
pub use protocol::{
    apply_phase_flip, bt2_protocol, build_concatenated, companion_leaves, concatenated_protocol,
    find_links,
    link_transfer_time, run_protocol, sender_singlet, sender_triplet, trigger_release,
    ProtocolSetup, ProtocolStep, TransferReport,
};
