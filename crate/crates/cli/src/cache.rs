//! On-disk census cache keyed by `CensusParams::cache_key`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use depthlab::census::{build_census_with, census_to_string, load_census, BuildOptions};
use depthlab::{CensusParams, HaltingCensus};

pub struct CensusCache {
    dir: Option<PathBuf>,
    options: BuildOptions,
}

/// Where a census came from, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Built,
    Cached,
    Rebuilt,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Built => "built",
            Origin::Cached => "cached",
            Origin::Rebuilt => "rebuilt",
        }
    }
}

impl CensusCache {
    pub fn new(dir: Option<PathBuf>, options: BuildOptions) -> Self {
        CensusCache { dir, options }
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    pub fn path_for(&self, params: &CensusParams) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.jsonl", params.cache_key())))
    }

    /// Returns the census for `params`, reading a valid cache entry when one
    /// exists and otherwise enumerating (and storing, if caching is on).
    pub fn get(&self, params: &CensusParams) -> Result<(HaltingCensus, Origin)> {
        let Some(path) = self.path_for(params) else {
            return Ok((self.build(params)?, Origin::Built));
        };
        let mut origin = Origin::Built;
        if path.exists() {
            match load_census(&path) {
                Ok(c) if c.params() == params => return Ok((c, Origin::Cached)),
                Ok(_) => eprintln!(
                    "warning: cached census {} was built with different parameters; rebuilding",
                    path.display()
                ),
                Err(e) => eprintln!("warning: cached census {} is invalid ({e}); rebuilding", path.display()),
            }
            origin = Origin::Rebuilt;
        }
        let census = self.build(params)?;
        write_atomic(&path, &census_to_string(&census))?;
        Ok((census, origin))
    }

    fn build(&self, params: &CensusParams) -> Result<HaltingCensus> {
        Ok(build_census_with(params, &self.options)?.0)
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving {} into place", path.display()))?;
    Ok(())
}
