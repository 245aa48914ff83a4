use crate::features::{FactorSeries, ReturnMatrix};
use crate::linalg::Matrix;

use super::{fit_ols, LinearModel, ModelError};

/// Three-factor regression of a stock's excess return.
///
/// A factor that is identically zero over the sample (HML when no external
/// series was supplied) is dropped from the regression; its beta is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorFit {
    pub ticker: String,
    pub alpha: f64,
    pub beta_mkt: Option<f64>,
    pub beta_smb: Option<f64>,
    pub beta_hml: Option<f64>,
    pub model: LinearModel,
}

/// Regresses `r_i - r_f` on `[(r_MKT - r_f), SMB, HML]` with intercept alpha.
pub fn fit_fama_french(
    r: &ReturnMatrix,
    f: &FactorSeries,
    ticker: &str,
) -> Result<FactorFit, ModelError> {
    let i = r
        .ticker_index(ticker)
        .ok_or_else(|| ModelError::UnknownTicker(ticker.to_string()))?;
    if f.dates != r.dates {
        return Err(ModelError::MisalignedAxes);
    }
    let weeks = r.dates.len();
    let excess: Vec<f64> = (0..weeks).map(|t| r.values[i][t] - f.risk_free[t]).collect();
    let market: Vec<f64> = (0..weeks).map(|t| f.mkt[t] - f.risk_free[t]).collect();
    let candidates = [("mkt", &market), ("smb", &f.smb), ("hml", &f.hml)];
    let used: Vec<(&str, &Vec<f64>)> = candidates
        .into_iter()
        .filter(|(_, s)| s.iter().any(|&v| v != 0.0))
        .collect();

    let mut data = Vec::with_capacity(weeks * used.len());
    for t in 0..weeks {
        data.extend(used.iter().map(|(_, s)| s[t]));
    }
    let x = Matrix::from_vec(weeks, used.len(), data);
    let names: Vec<String> = used.iter().map(|(n, _)| n.to_string()).collect();
    let model = fit_ols(&x, &excess, &names)?;
    Ok(FactorFit {
        ticker: ticker.to_string(),
        alpha: model.intercept,
        beta_mkt: model.coefficient("mkt"),
        beta_smb: model.coefficient("smb"),
        beta_hml: model.coefficient("hml"),
        model,
    })
}
