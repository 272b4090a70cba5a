//! Manufactured solutions and convergence studies.
