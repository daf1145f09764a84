//! RESTful Linked Data fetching.
//!
//! A dereference performs a GET with RDF content negotiation, follows
//! `303 See Other` (and permanent/found redirects) up to a bound, parses
//! the body by its served content type and skolemizes blank nodes. The
//! data obtained at the end of a redirect chain still describes the
//! originally requested URI, so triples always land in the graph named by
//! that URI.
//!
//! Each URI is fetched at most once per run: successes and failures are
//! both recorded, and a recorded failure is never retried. Transports are
//! pluggable — the fixture transport replays canned response chains from
//! a manifest and opens no sockets at all.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iri;
use crate::skolem::{skolemize, SkolemMinter};
use crate::store::QuadStore;
use crate::term::{Triple, Uri};
use crate::turtle::{parse_rdf, supported_content_type};
use crate::typing::admit_triples;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FetchFailure {
    #[error("HTTP {0}")]
    HttpStatus(u16),
    #[error("redirect limit exceeded")]
    RedirectLimit,
    #[error("redirect loop")]
    RedirectLoop,
    #[error("redirect without a Location header")]
    MissingLocation,
    #[error("unsupported content type `{0}`")]
    UnsupportedContentType(String),
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("timeout")]
    Timeout,
    #[error("no fixture entry for this URI")]
    NotInFixtures,
    #[error("transport error: {0}")]
    Io(String),
}

/// Fetching knobs. The accept list is sent as-is, in order of preference.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub accept: Vec<String>,
    pub max_redirects: usize,
    pub timeout_ms: u64,
    pub fixture_dir: Option<PathBuf>,
    /// Upper bound on concurrent fetches. The single-threaded step engine
    /// issues them serially, which satisfies any bound.
    pub parallelism: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            accept: vec![
                "text/turtle".to_string(),
                "application/n-triples".to_string(),
                "text/n3".to_string(),
            ],
            max_redirects: 5,
            timeout_ms: 10_000,
            fixture_dir: None,
            parallelism: 4,
        }
    }
}

/// One HTTP response, reduced to what dereferencing needs.
#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub location: Option<String>,
    pub body: Vec<u8>,
}

/// A pluggable GET.
pub trait Transport {
    fn get(&mut self, uri: &str, accept: &str) -> Result<HttpResponse, FetchFailure>;

    /// Access to the fixture replay state, when this transport is one.
    fn as_fixture(&self) -> Option<&FixtureTransport> {
        None
    }
}

/// Fixture manifest entry: a URI and the responses successive GETs of it
/// replay. Redirect entries hand off to the location's own entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub uri: String,
    pub responses: Vec<FixtureResponse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureResponse {
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_file: Option<String>,
    /// Inline body, an alternative to `body_file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

/// Replays canned responses from a fixture directory; never opens a
/// socket.
#[derive(Debug)]
pub struct FixtureTransport {
    dir: PathBuf,
    entries: BTreeMap<String, Vec<FixtureResponse>>,
    access_counts: BTreeMap<String, usize>,
    access_log: Vec<String>,
}

impl FixtureTransport {
    pub fn from_dir(dir: &Path) -> Result<Self, FetchFailure> {
        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| FetchFailure::Io(format!("{}: {e}", manifest_path.display())))?;
        let entries: Vec<FixtureEntry> = serde_json::from_str(&text)
            .map_err(|e| FetchFailure::Io(format!("{}: {e}", manifest_path.display())))?;
        Ok(FixtureTransport {
            dir: dir.to_path_buf(),
            entries: entries.into_iter().map(|e| (e.uri, e.responses)).collect(),
            access_counts: BTreeMap::new(),
            access_log: Vec::new(),
        })
    }

    /// In-memory fixtures for tests.
    pub fn from_entries(entries: Vec<FixtureEntry>) -> Self {
        FixtureTransport {
            dir: PathBuf::new(),
            entries: entries.into_iter().map(|e| (e.uri, e.responses)).collect(),
            access_counts: BTreeMap::new(),
            access_log: Vec::new(),
        }
    }

    /// How many GETs each URI has received.
    pub fn access_counts(&self) -> &BTreeMap<String, usize> {
        &self.access_counts
    }

    /// Every GET in order.
    pub fn access_log(&self) -> &[String] {
        &self.access_log
    }
}

impl Transport for FixtureTransport {
    fn as_fixture(&self) -> Option<&FixtureTransport> {
        Some(self)
    }

    fn get(&mut self, uri: &str, _accept: &str) -> Result<HttpResponse, FetchFailure> {
        self.access_log.push(uri.to_string());
        let count = self.access_counts.entry(uri.to_string()).or_insert(0);
        let n = *count;
        *count += 1;
        let responses = self.entries.get(uri).ok_or(FetchFailure::NotInFixtures)?;
        if responses.is_empty() {
            return Err(FetchFailure::NotInFixtures);
        }
        // repeat the last response for GETs beyond the scripted chain
        let spec = &responses[n.min(responses.len() - 1)];
        let body = match (&spec.body_file, &spec.body) {
            (Some(rel), _) => {
                let path = self.dir.join(rel);
                fs::read(&path).map_err(|e| FetchFailure::Io(format!("{}: {e}", path.display())))?
            }
            (None, Some(inline)) => inline.clone().into_bytes(),
            (None, None) => Vec::new(),
        };
        Ok(HttpResponse {
            status: spec.status,
            content_type: spec.content_type.clone(),
            location: spec.location.clone(),
            body,
        })
    }
}

/// Real HTTP transport. Redirects are handled by the dereferencer, not
/// the client, so every hop is observed and logged.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(cfg: &FetchConfig) -> Result<Self, FetchFailure> {
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| FetchFailure::Io(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&mut self, uri: &str, accept: &str) -> Result<HttpResponse, FetchFailure> {
        let response = self
            .client
            .get(uri)
            .header(reqwest::header::ACCEPT, accept)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    FetchFailure::Timeout
                } else {
                    FetchFailure::Io(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let header = |name: reqwest::header::HeaderName| {
            response
                .headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        };
        let content_type = header(reqwest::header::CONTENT_TYPE);
        let location = header(reqwest::header::LOCATION);
        let body = response
            .bytes()
            .map_err(|e| FetchFailure::Io(e.to_string()))?
            .to_vec();
        Ok(HttpResponse {
            status,
            content_type,
            location,
            body,
        })
    }
}

/// Per-URI fetch record. At most one per URI per run; failures are not
/// retried.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FetchRecord {
    Succeeded {
        admitted: usize,
        rejected: usize,
        at: DateTime<Utc>,
    },
    Failed {
        reason: String,
        at: DateTime<Utc>,
    },
}

/// The registry of dereference outcomes for this run.
#[derive(Debug, Clone, Default)]
pub struct FetchRegistry {
    records: BTreeMap<Uri, FetchRecord>,
}

impl FetchRegistry {
    pub fn new() -> Self {
        FetchRegistry::default()
    }

    pub fn record(&self, uri: &Uri) -> Option<&FetchRecord> {
        self.records.get(uri)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Uri, &FetchRecord)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Seeds the registry from a persisted record file. Only failures are
    /// honored: a recorded success carries no data, so the URI must be
    /// fetched again to be useful.
    pub fn load_failures(&mut self, path: &Path) -> std::io::Result<usize> {
        let text = fs::read_to_string(path)?;
        let entries: BTreeMap<String, FetchRecord> = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mut seeded = 0;
        for (uri, record) in entries {
            if let (Ok(uri), FetchRecord::Failed { .. }) = (Uri::new(uri), &record) {
                self.records.insert(uri, record);
                seeded += 1;
            }
        }
        Ok(seeded)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let map: BTreeMap<&str, &FetchRecord> =
            self.records.iter().map(|(u, r)| (u.as_str(), r)).collect();
        fs::write(path, serde_json::to_string_pretty(&map)?)
    }
}

/// Outcome of `load_named`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadStatus {
    AlreadyLoaded { admitted: usize, rejected: usize },
    Loaded { admitted: usize, rejected: usize },
    Failed { reason: String, cached: bool },
}

/// The stateful fetching pipeline: transport, redirect handling, blank
/// node skolemization, admission, and the fetch registry.
pub struct Dereferencer {
    transport: Box<dyn Transport>,
    cfg: FetchConfig,
    minter: SkolemMinter,
    registry: FetchRegistry,
}

impl Dereferencer {
    pub fn new(transport: Box<dyn Transport>, cfg: FetchConfig, minter: SkolemMinter) -> Self {
        Dereferencer {
            transport,
            cfg,
            minter,
            registry: FetchRegistry::new(),
        }
    }

    /// Builds the transport from the config: fixtures when a fixture
    /// directory is set, real HTTP otherwise.
    pub fn from_config(cfg: FetchConfig, minter: SkolemMinter) -> Result<Self, FetchFailure> {
        let transport: Box<dyn Transport> = match &cfg.fixture_dir {
            Some(dir) => Box::new(FixtureTransport::from_dir(dir)?),
            None => Box::new(HttpTransport::new(&cfg)?),
        };
        Ok(Dereferencer::new(transport, cfg, minter))
    }

    pub fn registry(&self) -> &FetchRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut FetchRegistry {
        &mut self.registry
    }

    pub fn transport(&self) -> &dyn Transport {
        self.transport.as_ref()
    }

    /// The fixture replay state, when fixtures are in use.
    pub fn fixture_transport(&self) -> Option<&FixtureTransport> {
        self.transport.as_fixture()
    }

    /// Performs the GET/redirect/parse/skolemize sequence for one URI.
    /// Returns the parsed ground triples and the redirect hops taken.
    pub fn dereference(&mut self, uri: &Uri) -> Result<(Vec<Triple>, Vec<String>), FetchFailure> {
        let accept = self.cfg.accept.join(", ");
        let mut hops: Vec<String> = Vec::new();
        let mut visited: Vec<String> = vec![uri.as_str().to_string()];
        let mut current = uri.as_str().to_string();
        loop {
            let response = self.transport.get(&current, &accept)?;
            match response.status {
                200..=299 => {
                    let content_type = response
                        .content_type
                        .ok_or_else(|| FetchFailure::UnsupportedContentType("missing".into()))?;
                    if !supported_content_type(&content_type) {
                        return Err(FetchFailure::UnsupportedContentType(content_type));
                    }
                    let outcome = parse_rdf(&response.body, &content_type, &current)
                        .map_err(|e| FetchFailure::Parse(e.to_string()))?;
                    for skip in &outcome.skipped {
                        log::warn!("{current}: skipped triple at {}: {}", skip.pos, skip.reason);
                    }
                    let triples = skolemize(&outcome.triples, &mut self.minter);
                    return Ok((triples, hops));
                }
                301..=303 => {
                    let location = response.location.ok_or(FetchFailure::MissingLocation)?;
                    let target = iri::resolve(&current, &location);
                    log::info!("{current}: {} -> {target}", response.status);
                    if visited.contains(&target) {
                        return Err(FetchFailure::RedirectLoop);
                    }
                    if hops.len() >= self.cfg.max_redirects {
                        return Err(FetchFailure::RedirectLimit);
                    }
                    hops.push(target.clone());
                    visited.push(target.clone());
                    current = target;
                }
                status => return Err(FetchFailure::HttpStatus(status)),
            }
        }
    }

    /// Ensures the named graph for `uri` is loaded: consults the registry,
    /// dereferences on a miss, admits the triples against the store's
    /// ontology, and inserts the admitted ones into the graph named by the
    /// originally requested URI. All failures become records, not errors.
    pub fn load_named(
        &mut self,
        store: &mut QuadStore,
        uri: &Uri,
        now: DateTime<Utc>,
    ) -> LoadStatus {
        match self.registry.record(uri) {
            Some(FetchRecord::Succeeded {
                admitted, rejected, ..
            }) => {
                return LoadStatus::AlreadyLoaded {
                    admitted: *admitted,
                    rejected: *rejected,
                };
            }
            Some(FetchRecord::Failed { reason, .. }) => {
                return LoadStatus::Failed {
                    reason: reason.clone(),
                    cached: true,
                };
            }
            None => {}
        }
        match self.dereference(uri) {
            Ok((triples, _hops)) => {
                let (admitted, rejected) = admit_triples(&triples, store.ontology());
                let counts = (admitted.len(), rejected.len());
                store
                    .insert_quads(uri, &admitted)
                    .expect("admitted triples re-check under the same ontology");
                self.registry.records.insert(
                    uri.clone(),
                    FetchRecord::Succeeded {
                        admitted: counts.0,
                        rejected: counts.1,
                        at: now,
                    },
                );
                LoadStatus::Loaded {
                    admitted: counts.0,
                    rejected: counts.1,
                }
            }
            Err(failure) => {
                let reason = failure.to_string();
                self.registry.records.insert(
                    uri.clone(),
                    FetchRecord::Failed {
                        reason: reason.clone(),
                        at: now,
                    },
                );
                LoadStatus::Failed {
                    reason,
                    cached: false,
                }
            }
        }
    }
}
