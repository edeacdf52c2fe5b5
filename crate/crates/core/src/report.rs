use serde::{Deserialize, Serialize};

use crate::entanglement::GmeVerdict;
use crate::locality::{BilocalCertificate, IdentityReport, ThresholdRecord};

/// Combined certification output.
///
/// `request` echoes every input parameter. `wall_time_ms` is left out unless
/// timing was requested, so that identical requests serialize identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub tool_version: String,
    pub request: serde_json::Value,
    pub threshold_record: ThresholdRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_report: Option<IdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bilocal: Option<BilocalCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gme_verdict: Option<GmeVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}
