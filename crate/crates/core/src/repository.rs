//! Content-addressed artifact store. A bundle (model XML, contract IRs,
//! dictionary, rendered text, mode) is keyed by the SHA-256 of its canonical
//! serialization and kept as one file per artifact under `<store>/<hash>/`.
//!
//! Canonical serialization, all lengths in decimal ASCII:
//!
//! ```text
//! tokenflow-bundle 1\n
//! mode <mode>\n
//! bpmn <len>\n<bytes>\n
//! irs <count>\n  then per IR: <len>\n<bytes>\n
//! dictionary <len>\n<bytes>\n
//! text <len>\n<bytes>\n
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};

use crate::compiler::ir::CompiledContract;
use crate::compiler::{emit_contract_text, Compilation, CompilationDictionary, CompilationMode, Relation};

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("NotFound: {0}")]
    NotFound(String),
    #[error("corrupt bundle {hash}: {why}")]
    Corrupt { hash: String, why: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactBundle {
    pub bpmn_xml: Vec<u8>,
    pub contract_irs: Vec<Vec<u8>>,
    pub dictionary: Vec<u8>,
    pub rendered_text: Vec<u8>,
    pub mode: CompilationMode,
}

fn section(out: &mut Vec<u8>, tag: &str, bytes: &[u8]) {
    if !tag.is_empty() {
        out.extend_from_slice(tag.as_bytes());
        out.push(b' ');
    }
    out.extend_from_slice(bytes.len().to_string().as_bytes());
    out.push(b'\n');
    out.extend_from_slice(bytes);
    out.push(b'\n');
}

impl ArtifactBundle {
    pub fn from_compilation(bpmn_xml: &[u8], comp: &Compilation) -> Self {
        let text: Vec<String> = comp.contracts.iter().map(emit_contract_text).collect();
        ArtifactBundle {
            bpmn_xml: bpmn_xml.to_vec(),
            contract_irs: comp.contracts.iter().map(CompiledContract::to_bytes).collect(),
            dictionary: serde_json::to_vec(&comp.dictionary).expect("dictionary serializes"),
            rendered_text: text.join("\n").into_bytes(),
            mode: comp.mode,
        }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = b"tokenflow-bundle 1\n".to_vec();
        out.extend_from_slice(format!("mode {}\n", self.mode).as_bytes());
        section(&mut out, "bpmn", &self.bpmn_xml);
        out.extend_from_slice(format!("irs {}\n", self.contract_irs.len()).as_bytes());
        for ir in &self.contract_irs {
            section(&mut out, "", ir);
        }
        section(&mut out, "dictionary", &self.dictionary);
        section(&mut out, "text", &self.rendered_text);
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    /// Rebuilds the compilation; relations follow from the reusable bindings.
    pub fn compilation(&self) -> Result<Compilation, String> {
        let contracts = self
            .contract_irs
            .iter()
            .map(|b| serde_json::from_slice::<CompiledContract>(b).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let dictionary: CompilationDictionary = serde_json::from_slice(&self.dictionary).map_err(|e| e.to_string())?;
        let mut relations = Vec::new();
        for c in &contracts {
            let h = c.hash();
            for r in &c.reusables {
                relations.push(Relation { parent: h.clone(), element: r.index, child: r.child.clone() });
            }
        }
        Ok(Compilation { mode: self.mode, root: dictionary.root.clone(), contracts, relations, dictionary })
    }
}

const BPMN: &str = "model.bpmn";
const MODE: &str = "mode";
const DICTIONARY: &str = "dictionary.json";
const TEXT: &str = "contracts.txt";

fn ir_name(i: usize) -> String {
    format!("contract-{i:03}.json")
}

#[derive(Debug, Clone)]
pub struct Repository {
    root: PathBuf,
}

static TMP_SEQ: AtomicU64 = AtomicU64::new(0);

fn valid_hash(h: &str) -> bool {
    h.len() == 64 && h.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

impl Repository {
    pub fn open(root: impl AsRef<Path>) -> io::Result<Self> {
        fs::create_dir_all(root.as_ref())?;
        Ok(Repository { root: root.as_ref().to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn contains(&self, hash: &str) -> bool {
        valid_hash(hash) && self.root.join(hash).is_dir()
    }

    /// Stores the bundle; storing the same bundle again is a no-op.
    pub fn put(&self, b: &ArtifactBundle) -> Result<String, RepoError> {
        let hash = b.hash();
        let dir = self.root.join(&hash);
        if dir.is_dir() {
            return Ok(hash);
        }
        let seq = TMP_SEQ.fetch_add(1, Ordering::Relaxed);
        let tmp = self.root.join(format!(".tmp-{hash}-{}-{seq}", std::process::id()));
        fs::create_dir_all(&tmp)?;
        fs::write(tmp.join(BPMN), &b.bpmn_xml)?;
        fs::write(tmp.join(MODE), b.mode.as_str())?;
        for (i, ir) in b.contract_irs.iter().enumerate() {
            fs::write(tmp.join(ir_name(i)), ir)?;
        }
        fs::write(tmp.join(DICTIONARY), &b.dictionary)?;
        fs::write(tmp.join(TEXT), &b.rendered_text)?;
        if fs::rename(&tmp, &dir).is_err() {
            // a concurrent put of the same bundle won the race
            fs::remove_dir_all(&tmp)?;
            if !dir.is_dir() {
                return Err(RepoError::Io(io::Error::other(format!("could not store {hash}"))));
            }
        }
        Ok(hash)
    }

    pub fn get(&self, hash: &str) -> Result<ArtifactBundle, RepoError> {
        if !self.contains(hash) {
            return Err(RepoError::NotFound(hash.to_string()));
        }
        let dir = self.root.join(hash);
        let corrupt = |why: String| RepoError::Corrupt { hash: hash.to_string(), why };
        let mode: CompilationMode = fs::read_to_string(dir.join(MODE))?.trim().parse().map_err(corrupt)?;
        let mut contract_irs = Vec::new();
        while dir.join(ir_name(contract_irs.len())).exists() {
            contract_irs.push(fs::read(dir.join(ir_name(contract_irs.len())))?);
        }
        let b = ArtifactBundle {
            bpmn_xml: fs::read(dir.join(BPMN))?,
            contract_irs,
            dictionary: fs::read(dir.join(DICTIONARY))?,
            rendered_text: fs::read(dir.join(TEXT))?,
            mode,
        };
        if b.hash() != hash {
            return Err(corrupt("content does not match its hash".into()));
        }
        Ok(b)
    }

    /// Stored hashes, sorted.
    pub fn list(&self) -> Result<Vec<String>, RepoError> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.root)? {
            let name = e?.file_name().to_string_lossy().into_owned();
            if valid_hash(&name) {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile;
    use crate::model::parse_bpmn_str;
    use crate::models::ORDER_TO_CASH;

    fn empty() -> ArtifactBundle {
        ArtifactBundle {
            bpmn_xml: vec![],
            contract_irs: vec![],
            dictionary: vec![],
            rendered_text: vec![],
            mode: CompilationMode::Full,
        }
    }

    #[test]
    fn empty_bundle_hash_is_stable() {
        let b = empty();
        assert_eq!(b.hash(), hex::encode(Sha256::digest(b.canonical_bytes())));
        assert_eq!(b.canonical_bytes(), b"tokenflow-bundle 1\nmode full\nbpmn 0\n\nirs 0\ndictionary 0\n\ntext 0\n\n");
    }

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let repo = Repository::open(dir.path()).unwrap();
        let m = parse_bpmn_str(ORDER_TO_CASH).unwrap();
        let comp = compile(&m, CompilationMode::Full).unwrap();
        let b = ArtifactBundle::from_compilation(ORDER_TO_CASH.as_bytes(), &comp);
        let h = repo.put(&b).unwrap();
        assert_eq!(repo.put(&b).unwrap(), h);
        assert_eq!(repo.list().unwrap(), vec![h.clone()]);
        assert_eq!(repo.get(&h).unwrap(), b);
        let again = Repository::open(dir.path()).unwrap();
        let back = again.get(&h).unwrap().compilation().unwrap();
        assert_eq!(back.contracts, comp.contracts);
        assert_eq!(back.root, comp.root);
        let mut a = back.relations.clone();
        let mut e = comp.relations.clone();
        a.sort_by(|x, y| (&x.parent, x.element).cmp(&(&y.parent, y.element)));
        e.sort_by(|x, y| (&x.parent, x.element).cmp(&(&y.parent, y.element)));
        assert_eq!(a, e);
    }

    #[test]
    fn unknown_hash_not_found() {
        let dir = tempfile::tempdir().unwrap();
        let repo = Repository::open(dir.path()).unwrap();
        assert!(matches!(repo.get(&"0".repeat(64)), Err(RepoError::NotFound(_))));
        assert!(matches!(repo.get("../etc"), Err(RepoError::NotFound(_))));
    }

    #[test]
    fn tampered_bundle_detected() {
        let dir = tempfile::tempdir().unwrap();
        let repo = Repository::open(dir.path()).unwrap();
        let h = repo.put(&empty()).unwrap();
        fs::write(dir.path().join(&h).join(BPMN), b"x").unwrap();
        assert!(matches!(repo.get(&h), Err(RepoError::Corrupt { .. })));
    }

    #[test]
    fn concurrent_puts_agree() {
        let dir = tempfile::tempdir().unwrap();
        let repo = Repository::open(dir.path()).unwrap();
        let hashes: Vec<String> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..8).map(|_| s.spawn(|| repo.put(&empty()).unwrap())).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(repo.list().unwrap().len(), 1);
    }
}
