//! Runtime flag prediction.
//!
//! Scores every grid configuration with the trained model on the program's
//! features and picks the one with the lowest predicted outcome class. Ties
//! go to the earliest grid index, so the grid order is the tie-break.

use thiserror::Error;

use crate::backend::OutcomeClass;
use crate::dtree::{predict_class, DecisionTreeModel, PredictError};
use crate::features::ProgramFeatures;
use crate::flags::{FlagConfiguration, FlagGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub chosen: FlagConfiguration,
    pub chosen_index: usize,
    pub predicted_class: OutcomeClass,
    /// Predicted class per grid index, kept for diagnostics.
    pub per_config_classes: Vec<(usize, OutcomeClass)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("flag grid is empty")]
    EmptyGrid,
}

/// Evaluate `features (+) encode(config)` for every configuration in the
/// grid and return the first index attaining the minimum predicted class.
pub fn select_flags(
    model: &DecisionTreeModel,
    features: &ProgramFeatures,
    grid: &FlagGrid,
) -> Result<Prediction, SelectError> {
    let feature_vector = features.to_vector();
    let mut per_config_classes = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, OutcomeClass)> = None;
    for (index, config) in grid.iter().enumerate() {
        let mut x = Vec::with_capacity(feature_vector.len() + config.encode().len());
        x.extend_from_slice(&feature_vector);
        x.extend_from_slice(&config.encode());
        let class = predict_class(model, &x)?;
        per_config_classes.push((index, class));
        if best.is_none_or(|(_, incumbent)| class < incumbent) {
            best = Some((index, class));
        }
    }
    let (chosen_index, predicted_class) = best.ok_or(SelectError::EmptyGrid)?;
    Ok(Prediction {
        chosen: *grid.get(chosen_index).expect("chosen index in grid"),
        chosen_index,
        predicted_class,
        per_config_classes,
    })
}
