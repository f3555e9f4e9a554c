//! SoS-convexity of the regularized Taylor model via Gram-matrix SDPs.

mod certify;
mod gram;
mod model;

pub use certify::{
    is_sos_convex, min_sigma_sos, sample_hessians, verify_certificate, write_dump,
    CertificateReport, GramCertificate, SosCheck, FEASIBILITY_TOL,
};
pub use gram::{gram_basis, gram_polynomial, gram_residual, hessian_form, regularizer_form};
pub use model::{regularization_power, CaseTag, SosModel};
