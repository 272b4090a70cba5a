//! Facet L2 and HDG projections.
