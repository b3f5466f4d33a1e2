//! A discretized crystal: spec, coefficient table and enrichment, shared across
//! quasi-momenta and contrasts.

use crate::assembly::{assemble_enriched, PlaneWaveBasis, PlaneWavePencil};
use crate::crystal::{CrystalSpec, QuasiMomentum};
use crate::enrichment::{Enrichment, EnrichmentKind};
use crate::error::{Error, Result};
use crate::fourier::{coefficients, CoefficientCache, IndicatorCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discretization {
    pub cutoff_n: usize,
    pub enrichment: EnrichmentKind,
}

impl Discretization {
    pub fn new(cutoff_n: usize, enrichment: EnrichmentKind) -> Self {
        Self { cutoff_n, enrichment }
    }

    pub fn plane_waves(cutoff_n: usize) -> Self {
        Self { cutoff_n, enrichment: EnrichmentKind::None }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub spec: CrystalSpec,
    pub disc: Discretization,
    pub coeffs: IndicatorCoefficients,
    pub enrichment: Enrichment,
}

impl Model {
    pub fn new(spec: CrystalSpec, disc: Discretization) -> Result<Self> {
        let coeffs = coefficients(&spec.geometry, disc.cutoff_n)?;
        Self::with_coefficients(spec, disc, coeffs)
    }

    pub fn cached(spec: CrystalSpec, disc: Discretization, cache: &CoefficientCache) -> Result<Self> {
        let coeffs = cache.load_or_compute(&spec.geometry, disc.cutoff_n)?;
        Self::with_coefficients(spec, disc, coeffs)
    }

    pub fn with_coefficients(
        spec: CrystalSpec,
        disc: Discretization,
        coeffs: IndicatorCoefficients,
    ) -> Result<Self> {
        if coeffs.cutoff_n < disc.cutoff_n {
            return Err(Error::CutoffMismatch { need: 2 * disc.cutoff_n, have: 2 * coeffs.cutoff_n });
        }
        let enrichment = Enrichment::build(&spec.geometry, disc.enrichment)?;
        Ok(Self { spec, disc, coeffs, enrichment })
    }

    pub fn basis(&self, alpha: QuasiMomentum) -> PlaneWaveBasis {
        PlaneWaveBasis::new(self.disc.cutoff_n, alpha)
    }

    pub fn pencil(&self, alpha: QuasiMomentum) -> Result<PlaneWavePencil> {
        assemble_enriched(&self.basis(alpha), &self.coeffs, &self.spec.material, &self.enrichment)
    }

    pub fn geometry_hash(&self) -> String {
        self.spec.geometry.short_hash()
    }

    pub fn dimension(&self) -> usize {
        3 * (2 * self.disc.cutoff_n + 1).pow(3) + 3 * self.enrichment.count
    }
}
