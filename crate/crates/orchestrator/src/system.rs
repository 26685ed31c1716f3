//! The running system: ledger, participants, and the deployed model.
//!
//! `run_dpmt` trains, logs every stage on chain and deploys atomically.
//! `run_dp` serves a prediction and leaves exactly two transactions: the
//! user's risk-factor submission and the engine's result.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dmp_core::eval::EvaluationReport;
use dmp_core::{ModelArtifact, Prediction};
use dmp_ledger::{Hash32, Ledger, LedgerConfig, Receipt, Role, SigningKey, Transaction, TxDraft, TxType};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::{prepare, DpInput};
use crate::error::{OrchestratorError, Result};
use crate::pipeline::{run_pipeline, PipelineOutcome, Stage, StageSink};
use crate::reproduce::ExperimentSpec;

pub const CA_ID: &str = "ca";
/// Participant that trains models and writes prediction results.
pub const ENGINE_ID: &str = "ai-engine";

fn provisioning_secret(id: &str) -> (String, String) {
    (format!("{id}:identity"), format!("{id}:pin"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedModel {
    pub version: String,
    pub dataset: String,
    pub artifact: ModelArtifact,
    pub report: EvaluationReport,
    pub deployment_tx: Hash32,
    pub stage_txs: Vec<Hash32>,
}

/// What `system.json` records about a deployment; the artifact itself lives
/// under `models/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DeploymentRecord {
    version: String,
    dataset: String,
    report: EvaluationReport,
    deployment_tx: Hash32,
    stage_txs: Vec<Hash32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct SystemState {
    deploy_counter: u64,
    active: Option<String>,
    deployments: Vec<DeploymentRecord>,
}

/// Off-chain body of a PredictionResult transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpResult {
    pub input_hash: Hash32,
    pub model_version: String,
    pub class: bool,
    pub score: f64,
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpOutcome {
    pub prediction: Prediction,
    pub model_version: String,
    pub input_hash: Hash32,
    pub request_tx: Receipt,
    pub result_tx: Receipt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpVerification {
    pub recorded: DpResult,
    pub reproduced: Prediction,
}

impl DpVerification {
    pub fn consistent(&self) -> bool {
        self.recorded.class == self.reproduced.positive
    }
}

pub struct System {
    config: Config,
    ledger: Ledger,
    keys: BTreeMap<String, SigningKey>,
    dir: Option<PathBuf>,
    state: SystemState,
    models: BTreeMap<String, DeployedModel>,
}

struct LedgerSink<'a> {
    ledger: &'a mut Ledger,
    key: &'a SigningKey,
    channel: &'a str,
    version: &'a str,
    txs: Vec<Hash32>,
}

impl LedgerSink<'_> {
    fn log(&mut self, stage: Stage, bytes: &[u8], extra: &[(&str, String)]) -> Result<Hash32> {
        let h = self.ledger.store_offchain(bytes)?;
        let mut draft = TxDraft::new(TxType::ModelStage, ENGINE_ID, self.version).payload(h).meta("stage", stage.name());
        for (k, v) in extra {
            draft = draft.meta(*k, v.as_str());
        }
        let r = self.ledger.submit_to(self.channel, draft.sign(self.key))?;
        self.txs.push(r.tx_id);
        Ok(r.tx_id)
    }
}

impl StageSink for LedgerSink<'_> {
    fn record(&mut self, stage: Stage, artifact: &[u8]) -> Result<()> {
        self.log(stage, artifact, &[]).map(|_| ())
    }
}

impl System {
    pub fn in_memory(config: Config) -> Result<System> {
        config.validate()?;
        let ledger = Ledger::new(LedgerConfig { seal_every: config.ledger.seal_every });
        let mut s =
            System { config, ledger, keys: BTreeMap::new(), dir: None, state: SystemState::default(), models: BTreeMap::new() };
        s.provision()?;
        Ok(s)
    }

    /// Opens or creates a state directory holding `ledger/`, `keys.json`,
    /// `system.json` and `models/`.
    pub fn open(dir: impl AsRef<Path>, config: Config) -> Result<System> {
        config.validate()?;
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(dir.join("models"))?;
        let ledger = Ledger::open(dir.join("ledger"), LedgerConfig { seal_every: config.ledger.seal_every })?;
        let keys = read_json_or_default(&dir.join("keys.json"))?;
        let state: SystemState = read_json_or_default(&dir.join("system.json"))?;
        let mut s = System { config, ledger, keys, dir: Some(dir), state, models: BTreeMap::new() };
        s.provision()?;
        s.load_models()?;
        Ok(s)
    }

    fn provision(&mut self) -> Result<()> {
        if self.ledger.registry().ca().is_none() {
            let (proof, pin) = provisioning_secret(CA_ID);
            self.ledger.bootstrap_ca(CA_ID, &proof, &pin)?;
        }
        self.ledger.create_channel(&self.config.ledger.channel)?;
        if !self.keys.contains_key(ENGINE_ID) {
            self.enroll(ENGINE_ID, Role::Hospital)?;
        }
        Ok(())
    }

    fn load_models(&mut self) -> Result<()> {
        let dir = self.dir.clone().expect("persistent system");
        for d in &self.state.deployments {
            let path = dir.join("models").join(format!("{}.json", d.version));
            let text = std::fs::read_to_string(&path)?;
            let artifact = ModelArtifact::from_json(&text).map_err(OrchestratorError::Load)?;
            let tx = self
                .ledger
                .find_tx(&self.config.ledger.channel, &d.deployment_tx)?
                .ok_or_else(|| OrchestratorError::Workflow(format!("deployment of {} is not on the ledger", d.version)))?;
            let expected = tx.payload_hash().ok_or_else(|| OrchestratorError::Workflow("deployment tx has no payload".into()))?;
            if Hash32::of(artifact.to_json().as_bytes()) != expected {
                return Err(OrchestratorError::Workflow(format!("artifact {} does not match its deployment tx", path.display())));
            }
            self.models.insert(
                d.version.clone(),
                DeployedModel {
                    version: d.version.clone(),
                    dataset: d.dataset.clone(),
                    artifact,
                    report: d.report.clone(),
                    deployment_tx: d.deployment_tx,
                    stage_txs: d.stage_txs.clone(),
                },
            );
        }
        Ok(())
    }

    fn persist(&self) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_json(&dir.join("keys.json"), &self.keys)?;
        write_json(&dir.join("system.json"), &self.state)
    }

    fn enroll(&mut self, id: &str, role: Role) -> Result<()> {
        let (proof, pin) = provisioning_secret(id);
        let (_, key) = self.ledger.register_participant(id, role, &proof, &pin)?;
        self.keys.insert(id.to_string(), key);
        self.persist()
    }

    /// Enrolls `id` with `role` unless it is already known.
    pub fn ensure_participant(&mut self, id: &str, role: Role) -> Result<()> {
        if self.keys.contains_key(id) {
            return Ok(());
        }
        if self.ledger.registry().contains(id) {
            return Err(OrchestratorError::Workflow(format!("participant '{id}' exists but its key is not held here")));
        }
        self.enroll(id, role)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut Ledger {
        &mut self.ledger
    }

    pub fn channel(&self) -> &str {
        &self.config.ledger.channel
    }

    pub fn key(&self, id: &str) -> Option<&SigningKey> {
        self.keys.get(id)
    }

    pub fn active(&self) -> Option<&DeployedModel> {
        self.state.active.as_ref().and_then(|v| self.models.get(v))
    }

    pub fn model(&self, version: &str) -> Option<&DeployedModel> {
        self.models.get(version)
    }

    /// Trains with the experiment's first seed and deploys the result. On any
    /// failure a `failed` stage tx is logged and the active model is kept.
    pub fn run_dpmt(&mut self, spec: &ExperimentSpec) -> Result<(DeployedModel, PipelineOutcome)> {
        spec.validate(&self.config)?;
        self.state.deploy_counter += 1;
        let version = format!("{}-{}-v{}", spec.dataset, spec.algorithm.label().to_ascii_lowercase(), self.state.deploy_counter);
        self.persist()?;

        let seed = spec.seeds[0];
        let opts = spec.options(&self.config, seed);
        let key = self.keys.get(ENGINE_ID).cloned().expect("engine provisioned");
        let channel = self.config.ledger.channel.clone();
        let mut sink = LedgerSink { ledger: &mut self.ledger, key: &key, channel: &channel, version: &version, txs: Vec::new() };

        let result = prepare(&self.config, &spec.dataset).and_then(|data| run_pipeline(&data, &opts, &mut sink));
        let outcome = match result {
            Ok(o) => o,
            Err(e) => {
                let msg = e.to_string();
                sink.log(Stage::Failed, msg.as_bytes(), &[("error", msg.clone())])?;
                return Err(e);
            }
        };
        let artifact_json = outcome.artifact.to_json();
        let deployment_tx = sink.log(
            Stage::Deploy,
            artifact_json.as_bytes(),
            &[("dataset", spec.dataset.clone()), ("artifact_digest", outcome.artifact.digest())],
        )?;
        let mut stage_txs = sink.txs;
        stage_txs.pop();

        let deployed = DeployedModel {
            version: version.clone(),
            dataset: spec.dataset.clone(),
            artifact: outcome.artifact.clone(),
            report: outcome.report.clone(),
            deployment_tx,
            stage_txs,
        };
        if let Some(dir) = &self.dir {
            std::fs::write(dir.join("models").join(format!("{version}.json")), &artifact_json)?;
        }
        let mut next = self.state.clone();
        next.deployments.push(DeploymentRecord {
            version: version.clone(),
            dataset: deployed.dataset.clone(),
            report: deployed.report.clone(),
            deployment_tx,
            stage_txs: deployed.stage_txs.clone(),
        });
        next.active = Some(version.clone());
        if let Some(dir) = &self.dir {
            write_json(&dir.join("system.json"), &next)?;
        }
        self.state = next;
        self.models.insert(version, deployed.clone());
        Ok((deployed, outcome))
    }

    /// Serves one prediction for `user`, enrolling them as an external user
    /// on first contact.
    pub fn run_dp(&mut self, user: &str, input: &DpInput) -> Result<DpOutcome> {
        let model = self
            .active()
            .cloned()
            .ok_or_else(|| OrchestratorError::Workflow("no model is deployed; run dpmt first".into()))?;
        self.ensure_participant(user, Role::ExternalUser)?;
        let channel = self.config.ledger.channel.clone();

        let input_bytes = input.to_bytes();
        let input_hash = self.ledger.store_offchain(&input_bytes)?;
        let user_key = self.keys[user].clone();
        let request = TxDraft::new(TxType::RiskFactorsForPrediction, user, user)
            .payload(input_hash)
            .meta("model_version", model.version.as_str())
            .sign(&user_key);
        let request_tx = self.ledger.submit_to(&channel, request)?;

        let prediction = model.artifact.predict_record(&input.to_record()).map_err(OrchestratorError::Transform)?;

        let result = DpResult {
            input_hash,
            model_version: model.version.clone(),
            class: prediction.positive,
            score: prediction.score,
            probability: prediction.probability,
        };
        let result_hash = self.ledger.store_offchain(&serde_json::to_vec(&result).expect("result serializes"))?;
        let engine = self.keys[ENGINE_ID].clone();
        let draft = TxDraft::new(TxType::PredictionResult, ENGINE_ID, user)
            .payload(result_hash)
            .reference(request_tx.tx_id)
            .meta("model_version", model.version.as_str())
            .meta("class", if prediction.positive { "positive" } else { "negative" })
            .meta("score", prediction.score.to_string())
            .sign(&engine);
        let result_tx = self.ledger.submit_to(&channel, draft)?;
        Ok(DpOutcome { prediction, model_version: model.version, input_hash, request_tx, result_tx })
    }

    /// Follows a PredictionResult tx back to its off-chain input and
    /// re-runs the model version it names.
    pub fn verify_dp(&self, result_tx: &Hash32) -> Result<DpVerification> {
        let channel = self.channel();
        let tx: &Transaction = self
            .ledger
            .find_tx(channel, result_tx)?
            .ok_or_else(|| OrchestratorError::Workflow(format!("transaction {result_tx} not found")))?;
        if tx.tx_type() != TxType::PredictionResult || !tx.is_accepted() {
            return Err(OrchestratorError::Workflow(format!("{result_tx} is not an accepted prediction result")));
        }
        let payload = tx.payload_hash().ok_or_else(|| OrchestratorError::Workflow("result tx has no payload".into()))?;
        let recorded: DpResult = serde_json::from_slice(&self.ledger.fetch(&payload)?)
            .map_err(|e| OrchestratorError::Workflow(format!("result payload is malformed: {e}")))?;
        let input = DpInput::from_record_bytes(&self.ledger.fetch(&recorded.input_hash)?)?;
        let model = self
            .models
            .get(&recorded.model_version)
            .ok_or_else(|| OrchestratorError::Workflow(format!("model {} is unknown", recorded.model_version)))?;
        let reproduced = model.artifact.predict_record(&input.to_record()).map_err(OrchestratorError::Transform)?;
        Ok(DpVerification { recorded, reproduced })
    }

    /// Seals pending transactions and writes state.
    pub fn flush(&mut self) -> Result<()> {
        self.ledger.flush()?;
        self.persist()
    }
}

fn read_json_or_default<T: Default + for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Ok(T::default());
    }
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| OrchestratorError::Workflow(format!("{} is malformed: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(value).expect("state serializes"))?;
    std::fs::rename(tmp, path)?;
    Ok(())
}
