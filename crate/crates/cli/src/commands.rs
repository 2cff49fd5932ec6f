use std::collections::BTreeMap;
use std::sync::Arc;

use commgrowth::latticeenum::{
    count_coefficients, down_only_count, lattice_ball, oracle_count, BallOptions, Caps, CoefficientTable, Method,
    OracleOptions, Pruning, RECORD_SCHEMA, TABLE_SCHEMA,
};
use commgrowth::rational::{ensure_prime, is_prime};
use commgrowth::zeta::{self, LocalSeries, RecurrenceFit, FIT_SCHEMA, SERIES_SCHEMA};
use commgrowth::{Catalog, GoodBasis, GroupSpec};
use serde::Serialize;

use crate::cache::{digest_keys, Cache, CacheRecord, CACHE_SCHEMA};
use crate::config::RunConfig;
use crate::verify::{self, VERIFY_SCHEMA};
use crate::{CapArgs, Cli, CliError, Command, Emit, GroupsAction, Scope};

pub const GLOBAL_SCHEMA: &str = "commgrowth.global/1";
pub const GAPS_SCHEMA: &str = "commgrowth.gaps/1";

pub struct Ctx {
    pub catalog: Catalog,
    pub cfg: RunConfig,
    pub cache: Option<Cache>,
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn caps(cfg: &RunConfig, a: &CapArgs) -> Result<Caps, CliError> {
    let mut c = cfg.caps.clone();
    if let Some(x) = a.max_envelope_index {
        c.max_envelope_index = x;
    }
    if let Some(x) = a.max_oracle_group_size {
        c.max_oracle_group_size = x;
    }
    if let Some(x) = a.max_frontier {
        c.max_frontier = x;
    }
    if let Some(x) = a.timeout {
        c.timeout_seconds = x;
    }
    RunConfig { caps: c.clone(), ..RunConfig::default() }.validate()?;
    Ok(c)
}

fn schemas() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("cache", CACHE_SCHEMA),
        ("fit", FIT_SCHEMA),
        ("gaps", GAPS_SCHEMA),
        ("global", GLOBAL_SCHEMA),
        ("group", commgrowth::catalog::GROUP_SCHEMA),
        ("lattice", RECORD_SCHEMA),
        ("series", SERIES_SCHEMA),
        ("table", TABLE_SCHEMA),
        ("verify", VERIFY_SCHEMA),
    ])
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    if cli.schema {
        print_json(&schemas());
        return Ok(0);
    }
    let Some(cmd) = cli.command else {
        return Err(CliError::Invalid("no command given (see --help)".into()));
    };
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if cli.cache.is_some() {
        cfg.cache = cli.cache;
    }
    if cli.catalog.is_some() {
        cfg.catalog = cli.catalog;
    }
    let catalog = match &cfg.catalog {
        Some(dir) => Catalog::load_dir(dir)?,
        None => Catalog::builtin().clone(),
    };
    let uses_cache = matches!(cmd, Command::Count { .. } | Command::Zeta { .. });
    let cache = if uses_cache && !cli.no_cache { Some(Cache::open(&cfg.cache_path())?) } else { None };
    let mut ctx = Ctx { catalog, cfg, cache };

    match cmd {
        Command::Groups { action: GroupsAction::List { json } } => groups_list(&ctx, json),
        Command::Count { group, prime, max_k, method, jobs, pruning, caps: ca } => {
            let opts = ctx.ball_options(&ca, jobs, pruning)?;
            let group = ctx.catalog.get(&group)?;
            let table = ctx.table(&group, prime, max_k, method, &opts)?;
            print_json(&table);
            Ok(cap_exit(&table))
        }
        Command::Zeta { group, scope, prime, max_k, max_n, method, fit, max_len, csv, cached_only, jobs, caps: ca } => {
            let opts = ctx.ball_options(&ca, jobs, Pruning::Tight)?;
            let group = ctx.catalog.get(&group)?;
            match scope {
                Scope::Local => {
                    let p = prime.ok_or_else(|| CliError::Invalid("--prime is required for local scope".into()))?;
                    ctx.zeta_local(&group, p, max_k, method, fit.then_some(max_len), csv, cached_only, &opts)
                }
                Scope::Global => {
                    let n = max_n.ok_or_else(|| CliError::Invalid("--max-n is required for global scope".into()))?;
                    ctx.zeta_global(&group, n, method, csv, cached_only, &opts)
                }
            }
        }
        Command::Verify { suite, seed, jobs } => {
            let seed = seed.unwrap_or(ctx.cfg.seed);
            let jobs = jobs.unwrap_or(ctx.cfg.jobs);
            let report = verify::run_suite(&ctx.catalog, suite, seed, jobs, &ctx.cfg.caps);
            print_json(&report);
            if report.passed {
                Ok(0)
            } else {
                Err(CliError::Failed(format!("suite {} has failing checks", report.suite)))
            }
        }
        Command::Lattices { group, prime, max_k, emit, jobs, caps: ca } => {
            let opts = ctx.ball_options(&ca, jobs, Pruning::Tight)?;
            let group = ctx.catalog.get(&group)?;
            lattices(&group, prime, max_k, emit, &opts)
        }
    }
}

fn cap_exit(t: &CoefficientTable) -> u8 {
    match &t.cap {
        Some(c) => {
            eprintln!(
                "cap {} hit (limit {}, observed {}); coefficients above k = {} are lower bounds",
                c.cap, c.limit, c.observed, t.complete_through
            );
            3
        }
        None => 0,
    }
}

#[derive(Serialize)]
struct GroupEntry<'a> {
    id: &'a str,
    dim: usize,
    class: usize,
    description: &'a str,
}

fn groups_list(ctx: &Ctx, json: bool) -> Result<u8, CliError> {
    let entries: Vec<GroupEntry> = ctx
        .catalog
        .iter()
        .map(|g| GroupEntry { id: &g.id, dim: g.dim, class: g.class, description: &g.description })
        .collect();
    if json {
        print_json(&entries);
    } else {
        for e in entries {
            println!("{:<8} d={} c={}  {}", e.id, e.dim, e.class, e.description);
        }
    }
    Ok(0)
}

fn lattices(group: &Arc<GroupSpec>, p: u64, max_k: usize, emit: Emit, opts: &BallOptions) -> Result<u8, CliError> {
    let ball = lattice_ball(group, p, max_k, opts)?;
    let gamma = GoodBasis::standard(group.clone(), Some(p));
    for r in &ball.records {
        r.verify(&gamma)?;
        match emit {
            Emit::Records => println!("{}", serde_json::to_string(&r.doc()).expect("serializable")),
            Emit::Keys => println!("{}", r.key()),
        }
    }
    match &ball.cap_hit {
        Some(c) => {
            eprintln!("{c}; records complete through k = {}", ball.completed_depth);
            Ok(3)
        }
        None => Ok(0),
    }
}

#[derive(Serialize)]
struct LocalDoc {
    series: LocalSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<RecurrenceFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

#[derive(Serialize)]
struct GlobalDoc {
    schema: &'static str,
    group: String,
    method: Method,
    max_n: u64,
    coeffs: Vec<u64>,
    local: BTreeMap<u64, Vec<u64>>,
}

#[derive(Serialize)]
struct GapDoc {
    schema: &'static str,
    group: String,
    method: Method,
    max_n: u64,
    missing: Vec<String>,
}

impl Ctx {
    fn ball_options(&self, a: &CapArgs, jobs: Option<usize>, pruning: Pruning) -> Result<BallOptions, CliError> {
        Ok(BallOptions { caps: caps(&self.cfg, a)?, pruning, jobs: jobs.unwrap_or(self.cfg.jobs) })
    }

    /// Cached coefficients when every `k ≤ max_k` is present, otherwise a
    /// fresh computation whose complete entries are appended to the cache.
    pub fn table(
        &mut self,
        group: &Arc<GroupSpec>,
        p: u64,
        max_k: usize,
        method: Method,
        opts: &BallOptions,
    ) -> Result<CoefficientTable, CliError> {
        ensure_prime(p)?;
        if let Some(c) = self.cache.as_ref().and_then(|c| c.lookup(&group.id, p, max_k, method)) {
            tracing::info!(group = %group.id, p, max_k, method = method.as_str(), "cache hit");
            return Ok(CoefficientTable::new(&group.id, p, method, max_k, c));
        }
        let (table, digests) = compute(group, p, max_k, method, opts)?;
        if let Some(cache) = self.cache.as_mut() {
            let upto = table.complete_through.min(max_k);
            let recs = (0..=upto)
                .map(|k| CacheRecord::new(&group.id, p, k, method, table.coeffs[k], digests.get(k).cloned().flatten()))
                .collect();
            let n = cache.append(recs)?;
            tracing::info!(written = n, path = %cache.path().display(), "cache updated");
        }
        Ok(table)
    }

    fn cached_prefix(&self, group: &str, p: u64, max_k: usize, method: Method) -> Vec<u64> {
        let Some(c) = &self.cache else { return vec![] };
        (0..=max_k).map_while(|k| c.get(group, p, k, method).map(|r| r.count)).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn zeta_local(
        &mut self,
        group: &Arc<GroupSpec>,
        p: u64,
        max_k: usize,
        method: Method,
        fit_len: Option<usize>,
        csv: bool,
        cached_only: bool,
        opts: &BallOptions,
    ) -> Result<u8, CliError> {
        ensure_prime(p)?;
        let (series, code) = if cached_only {
            let have = self.cached_prefix(&group.id, p, max_k, method);
            if have.len() <= max_k {
                let missing: Vec<String> = (have.len()..=max_k).map(|k| format!("{p}^{k}")).collect();
                print_json(&GapDoc {
                    schema: GAPS_SCHEMA,
                    group: group.id.clone(),
                    method,
                    max_n: p.saturating_pow(max_k as u32),
                    missing: missing.clone(),
                });
                return Err(CliError::Missing(format!("no cached coefficients for {}", missing.join(", "))));
            }
            let mut s = LocalSeries::new(&group.id, p, have);
            s.method = Some(method);
            (s, 0)
        } else {
            let t = self.table(group, p, max_k, method, opts)?;
            (LocalSeries::from_table(&t), cap_exit(&t))
        };
        let (fit, diagnostic) = match fit_len.map(|l| zeta::fit_recurrence(&series, l)) {
            None => (None, None),
            Some(Ok(f)) => {
                zeta::to_rational_function(&f, &series)?;
                (Some(f), None)
            }
            Some(Err(e)) => (None, Some(e.to_string())),
        };
        if csv {
            print!("{}", zeta::series_csv(&series));
            if let Some(f) = &fit {
                eprintln!("fit: {}", f.rational_function);
            }
            if let Some(d) = &diagnostic {
                eprintln!("fit: {d}");
            }
        } else {
            print_json(&LocalDoc { series, fit, diagnostic });
        }
        Ok(code)
    }

    fn zeta_global(
        &mut self,
        group: &Arc<GroupSpec>,
        max_n: u64,
        method: Method,
        csv: bool,
        cached_only: bool,
        opts: &BallOptions,
    ) -> Result<u8, CliError> {
        if max_n == 0 {
            return Err(CliError::Invalid("--max-n must be at least 1".into()));
        }
        let mut tables: BTreeMap<u64, LocalSeries> = BTreeMap::new();
        let mut code = 0;
        for p in (2..=max_n).filter(|&p| is_prime(p)) {
            let k = max_n.ilog(p) as usize;
            let s = if cached_only {
                let have = self.cached_prefix(&group.id, p, k, method);
                if have.is_empty() {
                    continue;
                }
                LocalSeries::new(&group.id, p, have)
            } else {
                let t = self.table(group, p, k, method, opts)?;
                code = code.max(cap_exit(&t));
                LocalSeries::from_table(&t)
            };
            tables.insert(p, s);
        }
        let gaps = zeta::missing_local_data(&tables, max_n);
        if !gaps.is_empty() {
            let missing: Vec<String> = gaps.iter().map(|(p, e)| format!("{p}^{e}")).collect();
            let n = missing.len();
            print_json(&GapDoc { schema: GAPS_SCHEMA, group: group.id.clone(), method, max_n, missing });
            return Err(CliError::Missing(format!("{n} prime powers up to {max_n} lack local data")));
        }
        let coeffs = zeta::global_coefficients(&tables, max_n)?;
        if csv {
            print!("{}", zeta::global_csv(&group.id, &coeffs));
        } else {
            let local = tables.into_iter().map(|(p, s)| (p, s.coeffs)).collect();
            print_json(&GlobalDoc { schema: GLOBAL_SCHEMA, group: group.id.clone(), method, max_n, coeffs, local });
        }
        Ok(code)
    }
}

/// Runs one counting method; the second component holds a digest of the
/// canonical keys counted at each `k` when the method produces them.
pub fn compute(
    group: &Arc<GroupSpec>,
    p: u64,
    max_k: usize,
    method: Method,
    opts: &BallOptions,
) -> Result<(CoefficientTable, Vec<Option<String>>), CliError> {
    match method {
        Method::Search => {
            let ball = lattice_ball(group, p, max_k, opts)?;
            let gamma = GoodBasis::standard(group.clone(), Some(p));
            let mut keys: Vec<Vec<String>> = vec![Vec::new(); max_k + 1];
            for r in &ball.records {
                r.verify(&gamma)?;
                keys[r.k() as usize].push(r.key());
            }
            let digests = keys.iter().map(|ks| Some(digest_keys(ks.iter().map(String::as_str)))).collect();
            Ok((count_coefficients(&ball), digests))
        }
        Method::Oracle => {
            let o = oracle_count(group, p, max_k, &OracleOptions { caps: opts.caps.clone(), ..Default::default() })?;
            Ok((o.table, vec![]))
        }
        Method::DownOnly => Ok((down_only_count(group, p, max_k, opts)?, vec![])),
    }
}
