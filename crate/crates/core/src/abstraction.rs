//! Bucket maps: per-phase assignments of canonical observation classes to
//! abstract buckets, plus the builders that produce them.
//!
//! Builders come in two families. Partition builders reproduce exact
//! equivalence classes (lossless isomorphism, outcome equivalence, recall
//! equivalence). Clustering builders compress further with weighted
//! k-means++ over equity, transition histograms or recall features. A map
//! records metadata (algorithm, parameters, seed, feature hash) so files
//! can be validated and rebuilt bit-identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::clustering::{kmeans_pp, CentroidRule, Distance, GroundDistanceMatrix, KmeansConfig};
use crate::features::Features;
use crate::game::PHASES;
use crate::iso::IsoTables;
use crate::util::{read_u32, read_u64, write_u32, write_u64, Fnv64};
use crate::{Error, Result};

const MAGIC: u64 = 0x4e32_3131_4d41_5031; // "N211MAP1"
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapMetadata {
    pub algorithm: String,
    pub params: String,
    pub seed: u64,
    pub feature_hash: u64,
}

/// Per-phase mapping canonical class index -> bucket id, dense in
/// [0, bucket_count(phase)).
#[derive(Clone, Debug)]
pub struct AbstractionMap {
    buckets: [Vec<u32>; PHASES],
    m: [usize; PHASES],
    pub meta: MapMetadata,
}

impl AbstractionMap {
    fn from_parts(buckets: [Vec<u32>; PHASES], meta: MapMetadata) -> AbstractionMap {
        let m = [
            count_dense(&buckets[0]),
            count_dense(&buckets[1]),
            count_dense(&buckets[2]),
        ];
        AbstractionMap { buckets, m, meta }
    }

    #[inline]
    pub fn bucket(&self, phase: u8, canonical: u32) -> u32 {
        self.buckets[phase as usize - 1][canonical as usize]
    }

    pub fn bucket_count(&self, phase: u8) -> usize {
        self.m[phase as usize - 1]
    }

    pub fn class_count(&self, phase: u8) -> usize {
        self.buckets[phase as usize - 1].len()
    }

    pub fn assignment(&self, phase: u8) -> &[u32] {
        &self.buckets[phase as usize - 1]
    }

    /// Content hash over assignments and metadata; strategy profiles embed
    /// it to detect map/profile mismatches.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_str(&self.meta.algorithm)
            .write_str(&self.meta.params)
            .write_u64(self.meta.seed)
            .write_u64(self.meta.feature_hash);
        for phase in 0..PHASES {
            h.write_u64(self.m[phase] as u64);
            for &b in &self.buckets[phase] {
                h.write_u32(b);
            }
        }
        h.finish()
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        write_u64(&mut w, MAGIC)?;
        write_u32(&mut w, FORMAT_VERSION)?;
        let alg = self.meta.algorithm.as_bytes();
        write_u64(&mut w, alg.len() as u64)?;
        w.write_all(alg)?;
        let params = self.meta.params.as_bytes();
        write_u64(&mut w, params.len() as u64)?;
        w.write_all(params)?;
        write_u64(&mut w, self.meta.seed)?;
        write_u64(&mut w, self.meta.feature_hash)?;
        for phase in 0..PHASES {
            write_u64(&mut w, self.m[phase] as u64)?;
            write_u64(&mut w, self.buckets[phase].len() as u64)?;
            for &b in &self.buckets[phase] {
                write_u32(&mut w, b)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Load a map and verify it was built against the same feature tables.
    pub fn load<P: AsRef<Path>>(path: P, features: &Features) -> Result<AbstractionMap> {
        let path_str = path.as_ref().display().to_string();
        let bad = |what: &str| Error::FileFormat {
            path: path_str.clone(),
            what: what.to_string(),
        };
        let mut r = BufReader::new(File::open(&path)?);
        if read_u64(&mut r)? != MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let read_string = |r: &mut BufReader<File>| -> Result<String> {
            let len = read_u64(r)? as usize;
            if len > 1 << 20 {
                return Err(bad("unreasonable string length"));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            String::from_utf8(buf).map_err(|_| bad("invalid utf-8"))
        };
        let algorithm = read_string(&mut r)?;
        let params = read_string(&mut r)?;
        let seed = read_u64(&mut r)?;
        let feature_hash = read_u64(&mut r)?;
        if feature_hash != features.content_hash() {
            return Err(Error::HashMismatch {
                what: "abstraction map feature tables",
                found: feature_hash,
                expected: features.content_hash(),
            });
        }
        let mut buckets: [Vec<u32>; PHASES] = Default::default();
        let mut m = [0usize; PHASES];
        for phase in 0..PHASES {
            m[phase] = read_u64(&mut r)? as usize;
            let len = read_u64(&mut r)? as usize;
            if len != features.class_count(phase as u8 + 1) {
                return Err(bad("class count mismatch"));
            }
            let mut v = Vec::with_capacity(len);
            for _ in 0..len {
                let b = read_u32(&mut r)?;
                if b as usize >= m[phase] {
                    return Err(bad("bucket id out of range"));
                }
                v.push(b);
            }
            buckets[phase] = v;
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        let map = AbstractionMap {
            buckets,
            m,
            meta: MapMetadata {
                algorithm,
                params,
                seed,
                feature_hash,
            },
        };
        for phase in 1..=PHASES as u8 {
            if count_dense(map.assignment(phase)) != map.bucket_count(phase) {
                return Err(bad("bucket ids not dense"));
            }
        }
        Ok(map)
    }
}

fn count_dense(assignment: &[u32]) -> usize {
    assignment.iter().map(|&b| b as usize + 1).max().unwrap_or(0)
}

/// True when every bucket of `coarse` is a union of `fine` buckets, i.e.
/// `fine` refines `coarse` (checked per phase over all canonical classes).
pub fn refines(fine: &AbstractionMap, coarse: &AbstractionMap) -> bool {
    for phase in 1..=PHASES as u8 {
        if !partition_refines(
            fine.assignment(phase),
            fine.bucket_count(phase),
            coarse.assignment(phase),
        ) {
            return false;
        }
    }
    true
}

/// Partition-level refinement: same fine label always lands in the same
/// coarse label.
pub fn partition_refines(fine: &[u32], fine_count: usize, coarse: &[u32]) -> bool {
    if fine.len() != coarse.len() {
        return false;
    }
    let mut to_coarse = vec![u32::MAX; fine_count];
    for (f, c) in fine.iter().zip(coarse) {
        let slot = &mut to_coarse[*f as usize];
        if *slot == u32::MAX {
            *slot = *c;
        } else if *slot != *c {
            return false;
        }
    }
    true
}

/// Lossless map: identity over canonical classes.
pub fn build_li(features: &Features) -> AbstractionMap {
    let buckets: [Vec<u32>; PHASES] = [
        (0..features.class_count(1) as u32).collect(),
        (0..features.class_count(2) as u32).collect(),
        (0..features.class_count(3) as u32).collect(),
    ];
    AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "li".into(),
            params: String::new(),
            seed: 0,
            feature_hash: features.content_hash(),
        },
    )
}

/// Outcome-equivalence map (exact classes, built backward).
pub fn build_poi(features: &Features) -> AbstractionMap {
    let buckets: [Vec<u32>; PHASES] = [
        features.poi_ids(1).0.to_vec(),
        features.poi_ids(2).0.to_vec(),
        features.poi_ids(3).0.to_vec(),
    ];
    AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "poi".into(),
            params: String::new(),
            seed: 0,
            feature_hash: features.content_hash(),
        },
    )
}

/// Recall-equivalence map with per-phase recall depths.
pub fn build_krwi(features: &Features, k: [u8; PHASES]) -> Result<AbstractionMap> {
    let mut buckets: [Vec<u32>; PHASES] = Default::default();
    for phase in 1..=PHASES as u8 {
        let (ids, _) = features.krwi_ids(phase, k[phase as usize - 1])?;
        buckets[phase as usize - 1] = ids.to_vec();
    }
    Ok(AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "krwi".into(),
            params: format!("k={}/{}/{}", k[0], k[1], k[2]),
            seed: 0,
            feature_hash: features.content_hash(),
        },
    ))
}

/// Tuning knobs shared by the clustering builders.
#[derive(Clone, Copy, Debug)]
pub struct ClusterParams {
    pub max_iters: u32,
    pub restarts: u32,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            max_iters: 300,
            restarts: 2,
        }
    }
}

fn phase_weights(iso: &IsoTables, phase: u8) -> Vec<f64> {
    (0..iso.class_count(phase) as u32)
        .map(|i| iso.orbit_size(phase, i) as f64)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cluster_phase(
    data: &[f64],
    dim: usize,
    weights: &[f64],
    distance: &Distance,
    rule: CentroidRule,
    m: usize,
    seed: u64,
    params: &ClusterParams,
    phase: u8,
    what: &'static str,
) -> Result<Vec<u32>> {
    let cfg = KmeansConfig {
        k: m,
        seed,
        max_iters: params.max_iters,
        restarts: params.restarts,
    };
    match kmeans_pp(data, dim, weights, distance, rule, &cfg) {
        Ok(r) => Ok(r.assignment),
        Err(Error::TooManyClusters { k, distinct }) => Err(Error::BucketsTooLarge {
            m: k,
            available: distinct,
            what,
            phase,
        }),
        Err(e) => Err(e),
    }
}

fn cluster_equity(
    iso: &IsoTables,
    features: &Features,
    phase: u8,
    m: usize,
    seed: u64,
    params: &ClusterParams,
) -> Result<Vec<u32>> {
    let data: Vec<f64> = (0..features.class_count(phase) as u32)
        .map(|i| features.equity(phase, i))
        .collect();
    let weights = phase_weights(iso, phase);
    cluster_phase(
        &data,
        1,
        &weights,
        &Distance::SquaredL2,
        CentroidRule::Mean,
        m,
        seed,
        params,
        phase,
        "distinct equity values",
    )
}

/// Cluster one phase over transition histograms indexed by the next
/// phase's buckets. `emd` selects the histogram distance.
#[allow(clippy::too_many_arguments)]
fn cluster_histograms(
    iso: &IsoTables,
    features: &Features,
    phase: u8,
    next_labels: &[u32],
    m: usize,
    seed: u64,
    params: &ClusterParams,
    emd: bool,
    buckets_after: &[Vec<u32>; PHASES],
) -> Result<Vec<u32>> {
    let next_m = count_dense(next_labels);
    let classes = features.class_count(phase);
    let mut data = vec![0.0f64; classes * next_m];
    for idx in 0..classes as u32 {
        let h = features.transition_histogram(phase, idx, next_labels, next_m)?;
        data[idx as usize * next_m..(idx as usize + 1) * next_m].copy_from_slice(&h);
    }
    let weights = phase_weights(iso, phase);
    let (distance, rule) = if emd {
        (
            ground_for_labels(iso, features, phase + 1, next_labels, next_m, buckets_after)?,
            CentroidRule::NormalizedMean { block: next_m },
        )
    } else {
        (Distance::SquaredL2, CentroidRule::Mean)
    };
    cluster_phase(
        &data,
        next_m,
        &weights,
        &distance,
        rule,
        m,
        seed,
        params,
        phase,
        "distinct histograms",
    )
}

/// Ground distance between the buckets of `phase`, used for EMD over
/// histograms indexed by those buckets. Last-phase buckets sit on the
/// equity line (position = weighted mean equity); earlier buckets are
/// compared by the EMD between their mean transition histograms.
fn ground_for_labels(
    iso: &IsoTables,
    features: &Features,
    phase: u8,
    labels: &[u32],
    num_labels: usize,
    buckets_after: &[Vec<u32>; PHASES],
) -> Result<Distance> {
    if phase as usize == PHASES {
        let mut pos = vec![0.0f64; num_labels];
        let mut mass = vec![0.0f64; num_labels];
        for (idx, &l) in labels.iter().enumerate() {
            let w = iso.orbit_size(phase, idx as u32) as f64;
            pos[l as usize] += w * features.equity(phase, idx as u32);
            mass[l as usize] += w;
        }
        for (p, m) in pos.iter_mut().zip(&mass) {
            *p /= m;
        }
        Ok(Distance::Emd1d { positions: pos })
    } else {
        // Mean histogram per bucket over the next phase's buckets, then
        // pairwise EMD under the next level's 1-D ground as the matrix.
        let next_labels = &buckets_after[phase as usize];
        let next_m = count_dense(next_labels);
        let mut means = vec![0.0f64; num_labels * next_m];
        let mut mass = vec![0.0f64; num_labels];
        for (idx, &l) in labels.iter().enumerate() {
            let w = iso.orbit_size(phase, idx as u32) as f64;
            let h = features.transition_histogram(phase, idx as u32, next_labels, next_m)?;
            for t in 0..next_m {
                means[l as usize * next_m + t] += w * h[t];
            }
            mass[l as usize] += w;
        }
        for l in 0..num_labels {
            for t in 0..next_m {
                means[l * next_m + t] /= mass[l];
            }
        }
        let positions = match ground_for_labels(
            iso,
            features,
            phase + 1,
            next_labels,
            next_m,
            buckets_after,
        )? {
            Distance::Emd1d { positions } => positions,
            _ => {
                return Err(Error::ShapeMismatch(
                    "recursive histogram grounds deeper than one level are unsupported",
                ))
            }
        };
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| positions[a].partial_cmp(&positions[b]).unwrap());
        let mut rows = vec![vec![0.0f64; num_labels]; num_labels];
        for i in 0..num_labels {
            for j in i + 1..num_labels {
                let mut cum = 0.0;
                let mut total = 0.0;
                for w in order.windows(2) {
                    cum += means[i * next_m + w[0]] - means[j * next_m + w[0]];
                    total += cum.abs() * (positions[w[1]] - positions[w[0]]);
                }
                rows[i][j] = total;
                rows[j][i] = total;
            }
        }
        Ok(Distance::EmdGeneral {
            matrix: GroundDistanceMatrix::new(&rows)?,
        })
    }
}

/// Equity-bucket map: per-phase k-means over scalar equity.
pub fn build_ehs(
    iso: &IsoTables,
    features: &Features,
    m: [usize; PHASES],
    seed: u64,
    params: &ClusterParams,
) -> Result<AbstractionMap> {
    let mut buckets: [Vec<u32>; PHASES] = Default::default();
    for phase in 1..=PHASES as u8 {
        buckets[phase as usize - 1] =
            cluster_equity(iso, features, phase, m[phase as usize - 1], seed, params)?;
    }
    Ok(AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "ehs".into(),
            params: format!("m={}/{}/{}", m[0], m[1], m[2]),
            seed,
            feature_hash: features.content_hash(),
        },
    ))
}

fn build_paa(
    iso: &IsoTables,
    features: &Features,
    m: [usize; PHASES],
    seed: u64,
    params: &ClusterParams,
    emd: bool,
) -> Result<AbstractionMap> {
    let mut buckets: [Vec<u32>; PHASES] = Default::default();
    buckets[PHASES - 1] = cluster_equity(iso, features, PHASES as u8, m[PHASES - 1], seed, params)?;
    for phase in (1..PHASES as u8).rev() {
        let next = buckets[phase as usize].clone();
        buckets[phase as usize - 1] = cluster_histograms(
            iso,
            features,
            phase,
            &next,
            m[phase as usize - 1],
            seed,
            params,
            emd,
            &buckets,
        )?;
    }
    Ok(AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: if emd { "paaemd".into() } else { "paaa".into() },
            params: format!("m={}/{}/{}", m[0], m[1], m[2]),
            seed,
            feature_hash: features.content_hash(),
        },
    ))
}

/// Potential-aware map with squared-L2 histogram distance.
pub fn build_paaa(
    iso: &IsoTables,
    features: &Features,
    m: [usize; PHASES],
    seed: u64,
    params: &ClusterParams,
) -> Result<AbstractionMap> {
    build_paa(iso, features, m, seed, params, false)
}

/// Potential-aware map with EMD histogram distance.
pub fn build_paaemd(
    iso: &IsoTables,
    features: &Features,
    m: [usize; PHASES],
    seed: u64,
    params: &ClusterParams,
) -> Result<AbstractionMap> {
    build_paa(iso, features, m, seed, params, true)
}

fn krwemd_phase(
    iso: &IsoTables,
    features: &Features,
    phase: u8,
    m: usize,
    k: u8,
    weights: &[f64],
    seed: u64,
    params: &ClusterParams,
) -> Result<Vec<u32>> {
    if k >= phase {
        return Err(Error::BadRecall { phase, k });
    }
    if weights.len() != k as usize + 1 {
        return Err(Error::BadWeights("one weight per recall block required"));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::BadWeights("weights must be nonnegative"));
    }
    // Deduplicate to recall classes; weight = total raw observations that
    // share the recall feature.
    let (ids, classes) = features.krwi_ids(phase, k)?;
    let dim = (k as usize + 1) * 3;
    let mut data = vec![0.0f64; classes * dim];
    let mut w = vec![0.0f64; classes];
    let mut seen = vec![false; classes];
    for idx in 0..features.class_count(phase) as u32 {
        let cls = ids[idx as usize] as usize;
        w[cls] += iso.orbit_size(phase, idx) as f64;
        if !seen[cls] {
            seen[cls] = true;
            let f = features.krwf(phase, k, idx)?;
            data[cls * dim..(cls + 1) * dim].copy_from_slice(&f);
        }
    }
    let distance = Distance::KrwEmd {
        weights: weights.to_vec(),
    };
    let cluster_of_class = cluster_phase(
        &data,
        dim,
        &w,
        &distance,
        CentroidRule::NormalizedMean { block: 3 },
        m,
        seed,
        params,
        phase,
        "distinct recall features",
    )?;
    Ok(ids.iter().map(|&c| cluster_of_class[c as usize]).collect())
}

/// Recall-feature clustering: per-phase k-means++ over the deduplicated
/// recall classes under the weighted per-block EMD. Phases are independent
/// (no backward pass). `weights[p]` must hold k[p]+1 block weights.
pub fn build_krwemd(
    iso: &IsoTables,
    features: &Features,
    m: [usize; PHASES],
    k: [u8; PHASES],
    weights: &[Vec<f64>; PHASES],
    seed: u64,
    params: &ClusterParams,
) -> Result<AbstractionMap> {
    let mut buckets: [Vec<u32>; PHASES] = Default::default();
    for phase in 1..=PHASES as u8 {
        let p = phase as usize - 1;
        buckets[p] = krwemd_phase(iso, features, phase, m[p], k[p], &weights[p], seed, params)?;
    }
    let weights_str: Vec<String> = weights
        .iter()
        .map(|w| {
            w.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join("+")
        })
        .collect();
    Ok(AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "krwemd".into(),
            params: format!(
                "m={}/{}/{};k={}/{}/{};w={}",
                m[0],
                m[1],
                m[2],
                k[0],
                k[1],
                k[2],
                weights_str.join(":")
            ),
            seed,
            feature_hash: features.content_hash(),
        },
    ))
}

/// Per-phase algorithm choice for composed maps (ablation pipelines mix
/// exact partitions in early phases with clustering later on).
#[derive(Clone, Debug)]
pub enum PhaseSpec {
    Li,
    Poi,
    Krwi { k: u8 },
    Ehs { m: usize },
    Paa { m: usize, emd: bool },
    KrwEmd { m: usize, k: u8, weights: Vec<f64> },
}

/// Build a map phase by phase, last phase first (potential-aware phases
/// consume the next phase's buckets).
pub fn build_composed(
    iso: &IsoTables,
    features: &Features,
    specs: &[PhaseSpec; PHASES],
    seed: u64,
    params: &ClusterParams,
) -> Result<AbstractionMap> {
    let mut buckets: [Vec<u32>; PHASES] = Default::default();
    for phase in (1..=PHASES as u8).rev() {
        let p = phase as usize - 1;
        buckets[p] = match &specs[p] {
            PhaseSpec::Li => (0..features.class_count(phase) as u32).collect(),
            PhaseSpec::Poi => features.poi_ids(phase).0.to_vec(),
            PhaseSpec::Krwi { k } => features.krwi_ids(phase, *k)?.0.to_vec(),
            PhaseSpec::Ehs { m } => cluster_equity(iso, features, phase, *m, seed, params)?,
            PhaseSpec::Paa { m, emd } => {
                if phase as usize == PHASES {
                    cluster_equity(iso, features, phase, *m, seed, params)?
                } else {
                    let next = buckets[p + 1].clone();
                    cluster_histograms(
                        iso, features, phase, &next, *m, seed, params, *emd, &buckets,
                    )?
                }
            }
            PhaseSpec::KrwEmd { m, k, weights } => {
                krwemd_phase(iso, features, phase, *m, *k, weights, seed, params)?
            }
        };
    }
    Ok(AbstractionMap::from_parts(
        buckets,
        MapMetadata {
            algorithm: "composed".into(),
            params: specs
                .iter()
                .map(|s| match s {
                    PhaseSpec::Li => "li".to_string(),
                    PhaseSpec::Poi => "poi".to_string(),
                    PhaseSpec::Krwi { k } => format!("krwi(k{k})"),
                    PhaseSpec::Ehs { m } => format!("ehs(m{m})"),
                    PhaseSpec::Paa { m, emd: true } => format!("paaemd(m{m})"),
                    PhaseSpec::Paa { m, emd: false } => format!("paaa(m{m})"),
                    PhaseSpec::KrwEmd { m, k, weights } => format!(
                        "krwemd(m{m};k{k};w{})",
                        weights
                            .iter()
                            .map(|x| format!("{x}"))
                            .collect::<Vec<_>>()
                            .join("+")
                    ),
                })
                .collect::<Vec<_>>()
                .join(":"),
            seed,
            feature_hash: features.content_hash(),
        },
    ))
}
