use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::handle::{o_train, ModelHandle};
use super::splits::{make_splits, SplitPlan};
use crate::attacks::{logit_confidence, score_probabilities, AttackScoreSet, AttackTag, ShadowConfidences};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::federation::{EnsembleView, RoundConfig};
use crate::metrics::{accuracy, roc_from_scores, tpr_at_fpr, RocCurve};
use crate::nn::{argmax, Architecture};
use crate::seed::{derive_seed, stream};

/// `split_index` of the rows that average over all models.
pub const AGGREGATE_SPLIT: i64 = -1;
/// Suffix appended to the strategy name for rows that attack the server's aggregated model.
pub const SERVER_SUFFIX: &str = "@server";

/// Everything that defines one cross-validated audit of a strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct CvConfig {
    pub round: RoundConfig,
    pub arch: Architecture,
    pub num_splits: usize,
    pub member_fraction: f64,
    pub attacks: Vec<AttackTag>,
    pub target_fpr: f64,
    pub seed: u64,
    /// Worker threads for training and scoring; 0 uses all cores.
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub strategy: String,
    pub split_index: i64,
    pub attack: AttackTag,
    pub auc: f64,
    pub tpr_at_fpr: f64,
    pub accuracy: f64,
    pub comm_bytes: u64,
    pub seed: u64,
}

/// ROC of all scores of one attack pooled over every model (and client view).
#[derive(Clone, Debug, PartialEq)]
pub struct PooledCurve {
    pub strategy: String,
    pub attack: AttackTag,
    pub auc: f64,
    pub curve: RocCurve,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ResultsRow>,
    pub curves: Vec<PooledCurve>,
}

impl Report {
    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.curves.extend(other.curves);
    }

    /// The mean-aggregate row for `(strategy, attack)`.
    pub fn aggregate(&self, strategy: &str, attack: AttackTag) -> Option<&ResultsRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.attack == attack && r.split_index == AGGREGATE_SPLIT)
    }
}

/// Seed of the model trained on split `split_index`.
pub fn model_seed(master_seed: u64, split_index: usize) -> u64 {
    derive_seed(master_seed, &[stream::MODEL, split_index as u64])
}

/// Seed handed to [`make_splits`].
pub fn split_seed(master_seed: u64) -> u64 {
    derive_seed(master_seed, &[stream::SPLIT])
}

fn validate(cfg: &CvConfig) -> Result<()> {
    if cfg.attacks.is_empty() {
        return Err(Error::InvalidConfig("no attacks requested".into()));
    }
    if cfg.attacks.contains(&AttackTag::Lira) && cfg.num_splits < 3 {
        return Err(Error::InvalidConfig("lira needs at least 3 splits".into()));
    }
    if !(0.0..=1.0).contains(&cfg.target_fpr) {
        return Err(Error::InvalidConfig("target_fpr must lie in [0, 1]".into()));
    }
    cfg.round.validate()
}

/// Trains one model per split and audits each against every requested attack,
/// using the other models as LiRA shadows.
///
/// Rows come per attack in split order, each block closed by a mean-aggregate
/// row. Weight-sharing strategies get a second block for the server model.
pub fn cross_validate(cfg: &CvConfig, data: &Dataset) -> Result<Report> {
    validate(cfg)?;
    let plans =
        make_splits(data.len(), cfg.num_splits, cfg.member_fraction, cfg.round.num_clients, split_seed(cfg.seed))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    pool.install(|| {
        let handles: Vec<ModelHandle> = plans
            .par_iter()
            .map(|plan| o_train(plan, &cfg.round, &cfg.arch, data, model_seed(cfg.seed, plan.split_index)))
            .collect::<Result<_>>()?;

        let name = cfg.round.strategy.name();
        let client_views: Vec<EnsembleView> = (0..handles[0].client_views()).map(EnsembleView::Client).collect();
        let mut report = audit(cfg, data, &plans, &handles, &client_views, name)?;
        if handles[0].has_server_view() {
            let label = format!("{name}{SERVER_SUFFIX}");
            report.extend(audit(cfg, data, &plans, &handles, &[EnsembleView::Server], &label)?);
        }
        Ok(report)
    })
}

/// Per-model outcome of one attack, averaged over views.
struct ModelOutcome {
    auc: f64,
    tpr: f64,
    score_sets: Vec<AttackScoreSet>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn audit(
    cfg: &CvConfig,
    data: &Dataset,
    plans: &[SplitPlan],
    handles: &[ModelHandle],
    views: &[EnsembleView],
    label: &str,
) -> Result<Report> {
    // probs[v][j]: view v of model j on the whole base set; queried once, shared read-only
    let probs: Vec<Vec<Array2<f64>>> = views
        .iter()
        .map(|&view| handles.par_iter().map(|h| h.predict(view, data.view())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let phi: Vec<Vec<Vec<f64>>> = if cfg.attacks.contains(&AttackTag::Lira) {
        probs
            .iter()
            .map(|per_model| {
                per_model
                    .par_iter()
                    .map(|p| {
                        p.rows()
                            .into_iter()
                            .zip(&data.labels)
                            .map(|(row, &y)| logit_confidence(&row.to_vec(), y))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let per_model: Vec<(f64, Vec<ModelOutcome>)> = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| {
            let ids: Vec<usize> = plan.member_ids.iter().chain(&plan.nonmember_ids).copied().collect();
            let is_member: Vec<bool> = ids.iter().map(|&id| plan.is_member(id)).collect();
            let labels = data.select_labels(&ids);
            let held_out = data.select_labels(&plan.nonmember_ids);

            let acc = mean(
                probs
                    .iter()
                    .map(|per_model| {
                        let p = &per_model[i];
                        let predicted: Vec<usize> =
                            plan.nonmember_ids.iter().map(|&id| argmax(p.row(id).iter().copied())).collect();
                        accuracy(&predicted, &held_out)
                    })
                    .collect::<Result<Vec<_>>>()?,
            );

            let outcomes = cfg
                .attacks
                .iter()
                .map(|&tag| {
                    let score_sets = (0..views.len())
                        .map(|v| {
                            let target = probs[v][i].select(ndarray::Axis(0), &ids);
                            let shadows = (tag == AttackTag::Lira).then(|| shadow_confidences(&phi[v], plans, i, &ids));
                            score_probabilities(tag, target.view(), &labels, &ids, &is_member, shadows.as_ref())
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let curves = score_sets
                        .iter()
                        .map(|s| roc_from_scores(&s.scores, &s.is_member))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(ModelOutcome {
                        auc: mean(curves.iter().map(RocCurve::area)),
                        tpr: mean(curves.iter().map(|c| tpr_at_fpr(c, cfg.target_fpr))),
                        score_sets,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((acc, outcomes))
        })
        .collect::<Result<_>>()?;

    let comm: Vec<u64> = handles.iter().map(ModelHandle::comm_bytes).collect();
    let mut report = Report::default();
    for (a, &tag) in cfg.attacks.iter().enumerate() {
        let mut rows = Vec::with_capacity(plans.len() + 1);
        for (i, (acc, outcomes)) in per_model.iter().enumerate() {
            rows.push(ResultsRow {
                strategy: label.to_string(),
                split_index: i as i64,
                attack: tag,
                auc: outcomes[a].auc,
                tpr_at_fpr: outcomes[a].tpr,
                accuracy: *acc,
                comm_bytes: comm[i],
                seed: cfg.seed,
            });
        }
        let aggregate = ResultsRow {
            strategy: label.to_string(),
            split_index: AGGREGATE_SPLIT,
            attack: tag,
            auc: mean(rows.iter().map(|r| r.auc)),
            tpr_at_fpr: mean(rows.iter().map(|r| r.tpr_at_fpr)),
            accuracy: mean(rows.iter().map(|r| r.accuracy)),
            comm_bytes: comm.iter().sum::<u64>() / comm.len() as u64,
            seed: cfg.seed,
        };
        rows.push(aggregate);
        report.rows.extend(rows);

        let (scores, flags): (Vec<f64>, Vec<bool>) = per_model
            .iter()
            .flat_map(|(_, outcomes)| outcomes[a].score_sets.iter())
            .flat_map(|s| s.scores.iter().copied().zip(s.is_member.iter().copied()))
            .unzip();
        let curve = roc_from_scores(&scores, &flags)?;
        report.curves.push(PooledCurve { strategy: label.to_string(), attack: tag, auc: curve.area(), curve });
    }
    Ok(report)
}

/// Confidences of every model but `target` on `ids`, with their membership flags.
fn shadow_confidences(phi: &[Vec<f64>], plans: &[SplitPlan], target: usize, ids: &[usize]) -> ShadowConfidences {
    let mut out = ShadowConfidences::default();
    for (j, (model_phi, plan)) in phi.iter().zip(plans).enumerate() {
        if j == target {
            continue;
        }
        out.phi.push(ids.iter().map(|&id| model_phi[id]).collect());
        out.is_in.push(ids.iter().map(|&id| plan.is_member(id)).collect());
    }
    out
}
