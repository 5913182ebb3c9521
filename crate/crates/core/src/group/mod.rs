//! Unitary representations of rotations and cyclic translations.

pub mod rotation;
pub mod spin;
pub mod translation;

pub use rotation::{rotation_compose, rotation_matrix, RotationVector};
pub use spin::{
    global_phase, physical_observable, representation_defect, rotation_unitary, spin_matrices, spin_matrices_f64,
    AlgebraResiduals, HalfInteger, PhysicalScale, RepresentationDefect, SpinRepresentation,
};
pub use translation::{cyclic_shift, cyclic_translation_rep, CyclicTranslationRep};
