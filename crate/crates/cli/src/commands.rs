use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use carryfrac::dimension::{
    default_render_side, dimension_table, increment_analysis, known_erratum, Family,
    IncrementAnalysis,
};
use carryfrac::render::{render_indicator, render_table, ImageFormat, ImageSpec, Palette};
use carryfrac::verify::{self, Suite, Transforms, VerifyConfig};
use carryfrac::{
    build_table, indicator, table_rows, Base, GridSpec, PatternQuery, Target, TransformKind,
};

use crate::config::ConfigFile;
use crate::{open_output, usage, CliError, OUT_DIR_ENV};

/// Reference value and acceptance band for the overflow-set dimension.
const INCREMENT_REFERENCE: f64 = 1.584962500721156;
const INCREMENT_BAND: (f64, f64) = (1.485, 1.685);

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub base: Option<u64>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// cvt, evt-max or evt-min
    #[arg(long)]
    pub transform: Option<String>,
    /// Write a header row of column indices
    #[arg(long)]
    pub header: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub base: Option<u64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub transform: Option<String>,
    /// zero, top or a value; omit to render the whole value table
    #[arg(long)]
    pub target: Option<String>,
    /// p1, p4 (bitmaps) or p2, p5, p6 (value tables)
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub cell_pixels: Option<usize>,
    /// gray, or mod:M for palette index v mod M
    #[arg(long)]
    pub palette: Option<String>,
    /// Draw row a = 0 at the bottom
    #[arg(long)]
    pub flip: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    /// cvt or evt
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub from: Option<u64>,
    #[arg(long)]
    pub to: Option<u64>,
    /// csv or jsonl
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub header: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// all, identities, lattice, substitution, counts, convergence, box-count
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random pairs per base in the identity suite
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Run against a deliberately broken carry transform
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

#[derive(Debug, Args)]
pub struct IncrementArgs {
    #[arg(long)]
    pub base: Option<u64>,
    /// Raster side; a common multiple of base-1 and base
    #[arg(long)]
    pub render_side: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Output directory (default: $CARRYFRAC_OUT_DIR, else ./repro)
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

fn parse_base(cfg: &ConfigFile, flag: Option<u64>, name: &str) -> Result<Base, CliError> {
    let raw = cfg.require(flag, name)?;
    Base::new(raw).map_err(usage(name))
}

fn parse_with<T>(
    cfg: &ConfigFile,
    flag: Option<String>,
    name: &str,
    default: Option<&str>,
) -> Result<T, CliError>
where
    T: std::str::FromStr<Err = carryfrac::Error>,
{
    let raw = match cfg.resolve(flag, name)? {
        Some(raw) => raw,
        None => default
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("--{name} is required")))?,
    };
    raw.parse::<T>().map_err(usage(name))
}

fn grid_spec(cfg: &ConfigFile, base: Option<u64>, depth: Option<u32>) -> Result<GridSpec, CliError> {
    let base = parse_base(cfg, base, "base")?;
    let depth = cfg.require(depth, "depth")?;
    GridSpec::new(base, depth).map_err(usage("depth"))
}

fn finish(mut out: Box<dyn Write>) -> Result<(), CliError> {
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn write_table_csv(
    out: &mut dyn Write,
    spec: &GridSpec,
    t: TransformKind,
    header: bool,
) -> Result<(), CliError> {
    let rows = table_rows(spec, t).map_err(usage("depth"))?;
    if header {
        let cols: Vec<String> = (0..spec.side()).map(|b| b.to_string()).collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    for row in rows {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn table(args: TableArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let spec = grid_spec(cfg, args.base, args.depth)?;
    let t: TransformKind = parse_with(cfg, args.transform, "transform", None)?;
    let header = cfg.switch(args.header, "header")?;
    let out_path = cfg.resolve(args.out, "out")?;

    let mut out = open_output(out_path.as_deref())?;
    write_table_csv(&mut out, &spec, t, header)?;
    finish(out)
}

fn parse_palette(raw: &str) -> Result<Palette, CliError> {
    let lower = raw.to_ascii_lowercase();
    if lower == "gray" || lower == "grey" {
        return Ok(Palette::GrayScaleLinear);
    }
    lower
        .strip_prefix("mod:")
        .and_then(|m| m.parse::<u64>().ok())
        .filter(|&m| m >= 1)
        .map(Palette::ValueModulo)
        .ok_or_else(|| {
            CliError::Usage(format!("--palette: expected gray or mod:M with M >= 1, got {raw:?}"))
        })
}

pub fn render(args: RenderArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let spec = grid_spec(cfg, args.base, args.depth)?;
    let t: TransformKind = parse_with(cfg, args.transform, "transform", None)?;
    let target: Option<Target> = cfg
        .resolve(args.target, "target")?
        .map(|raw| raw.parse::<Target>().map_err(usage("target")))
        .transpose()?;
    let default_format = if target.is_some() { "p4" } else { "p5" };
    let format: ImageFormat = parse_with(cfg, args.format, "format", Some(default_format))?;
    if target.is_some() != format.is_bitmap() {
        return Err(CliError::Usage(format!(
            "--format: {format} does not fit {}",
            if target.is_some() {
                "an indicator grid (use p1 or p4)"
            } else {
                "a value table (use p2, p5 or p6, or pass --target)"
            }
        )));
    }
    let cell_pixels = cfg.resolve(args.cell_pixels, "cell-pixels")?.unwrap_or(1);
    if cell_pixels == 0 {
        return Err(CliError::Usage("--cell-pixels must be at least 1".into()));
    }
    let palette = match cfg.resolve(args.palette, "palette")? {
        Some(raw) => parse_palette(&raw)?,
        None => Palette::GrayScaleLinear,
    };
    let flip = cfg.switch(args.flip, "flip")?;
    let out_path = cfg.resolve(args.out, "out")?;

    let image = ImageSpec::new(format)
        .cell_pixels(cell_pixels)
        .palette(palette)
        .flip(flip);
    let bytes = match target {
        Some(target) => {
            let q = PatternQuery::new(t, target);
            let grid = indicator(&spec, &q).map_err(usage("target"))?;
            render_indicator(&grid, &image).map_err(usage("format"))?
        }
        None => {
            let table = build_table(&spec, t).map_err(usage("depth"))?;
            render_table(&table, &image).map_err(usage("format"))?
        }
    };
    let mut out = open_output(out_path.as_deref())?;
    out.write_all(&bytes)?;
    finish(out)
}

#[derive(Serialize)]
struct DimRow {
    which: Family,
    base: u64,
    copies: u64,
    scale_denominator: u64,
    dimension: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    published_erratum: Option<f64>,
}

fn write_dims(
    out: &mut dyn Write,
    which: Family,
    from: Base,
    to: Base,
    jsonl: bool,
    header: bool,
) -> Result<(), CliError> {
    let records = dimension_table(from, to, which).map_err(usage("to"))?;
    if header && !jsonl {
        writeln!(out, "base,copies,scale_denominator,dimension")?;
    }
    let mut notes = Vec::new();
    for r in &records {
        let erratum = known_erratum(which, r.base);
        if jsonl {
            let row = DimRow {
                which,
                base: r.base.get(),
                copies: r.copies,
                scale_denominator: r.scale_denominator,
                dimension: r.dimension,
                published_erratum: erratum,
            };
            writeln!(out, "{}", serde_json::to_string(&row).expect("plain struct"))?;
        } else {
            writeln!(
                out,
                "{},{},{},{:.9}",
                r.base, r.copies, r.scale_denominator, r.dimension
            )?;
        }
        if let Some(printed) = erratum {
            notes.push(format!(
                "# base {}: log({})/log({}) = {:.9}; the widely reproduced value {printed} does not satisfy this formula",
                r.base, r.copies, r.base, r.dimension
            ));
        }
    }
    if !jsonl {
        for note in notes {
            writeln!(out, "{note}")?;
        }
    }
    Ok(())
}

pub fn dim(args: DimArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let which: Family = parse_with(cfg, args.which, "which", Some("cvt"))?;
    let from = Base::new(cfg.resolve(args.from, "from")?.unwrap_or(2)).map_err(usage("from"))?;
    let to = Base::new(cfg.resolve(args.to, "to")?.unwrap_or(29)).map_err(usage("to"))?;
    if from > to {
        return Err(CliError::Usage(format!("--to: {to} is below --from {from}")));
    }
    let format = cfg
        .resolve(args.format, "format")?
        .unwrap_or_else(|| "csv".to_string());
    let jsonl = match format.as_str() {
        "csv" => false,
        "jsonl" => true,
        other => {
            return Err(CliError::Usage(format!(
                "--format: expected csv or jsonl, got {other:?}"
            )))
        }
    };
    let header = cfg.switch(args.header, "header")?;
    let out_path = cfg.resolve(args.out, "out")?;

    let mut out = open_output(out_path.as_deref())?;
    write_dims(&mut out, which, from, to, jsonl, header)?;
    finish(out)
}

pub fn verify(args: VerifyArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let suite: Suite = parse_with(cfg, args.suite, "suite", Some("all"))?;
    let defaults = VerifyConfig::default();
    let n_max = cfg.resolve(args.n_max, "n-max")?.unwrap_or(defaults.n_max);
    if n_max < 3 {
        return Err(CliError::Usage(format!("--n-max must be at least 3, got {n_max}")));
    }
    let seed = cfg.resolve(args.seed, "seed")?.unwrap_or(defaults.seed);
    let pairs = cfg.resolve(args.pairs, "pairs")?.unwrap_or(defaults.random_pairs);
    let corrupt = cfg.switch(args.corrupt, "corrupt")?;
    let out_path = cfg.resolve(args.out, "out")?;

    let config = VerifyConfig {
        n_max,
        seed,
        random_pairs: pairs,
        transforms: if corrupt {
            Transforms::corrupted()
        } else {
            Transforms::default()
        },
    };
    eprintln!("carryfrac: verify suite={suite} n_max={n_max} seed={seed} pairs={pairs}");
    let mut out = open_output(out_path.as_deref())?;
    let results = verify::run(suite, &config);
    for r in &results {
        writeln!(out, "{}", serde_json::to_string(r).expect("plain struct"))?;
    }
    finish(out)?;

    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    if failed.is_empty() {
        eprintln!("carryfrac: {} checks passed", results.len());
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} of {} checks failed, first: {} ({}); replay with --seed {seed}",
            failed.len(),
            results.len(),
            failed[0].check,
            failed[0].detail
        )))
    }
}

#[derive(Serialize)]
struct IncrementReport<'a> {
    #[serde(flatten)]
    analysis: &'a IncrementAnalysis,
    dimension: f64,
    reference: f64,
    band: [f64; 2],
    in_band: bool,
}

fn write_increment(out: &mut dyn Write, analysis: &IncrementAnalysis) -> Result<(), CliError> {
    let d = analysis.fit.slope;
    let report = IncrementReport {
        analysis,
        dimension: d,
        reference: INCREMENT_REFERENCE,
        band: [INCREMENT_BAND.0, INCREMENT_BAND.1],
        in_band: (INCREMENT_BAND.0..=INCREMENT_BAND.1).contains(&d),
    };
    writeln!(out, "{}", serde_json::to_string(&report).expect("plain struct"))?;
    Ok(())
}

pub fn increment(args: IncrementArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let n = parse_base(cfg, args.base, "base")?;
    if n.get() < 3 {
        return Err(CliError::Usage(format!(
            "--base must be at least 3 (the overlay needs a base-{} generator), got {n}",
            n.get().saturating_sub(1)
        )));
    }
    let side = match cfg.resolve(args.render_side, "render-side")? {
        Some(s) => s,
        None => default_render_side(n).map_err(usage("base"))?,
    };
    let (lo, hi) = (n.get() - 1, n.get());
    if side == 0 || side % lo != 0 || side % hi != 0 {
        return Err(CliError::Usage(format!(
            "--render-side must be a common multiple of {lo} and {hi}, got {side}"
        )));
    }
    let out_path = cfg.resolve(args.out, "out")?;
    let analysis = increment_analysis(n, side).map_err(usage("render-side"))?;
    let mut out = open_output(out_path.as_deref())?;
    write_increment(&mut out, &analysis)?;
    finish(out)
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(rel);
    let mut out = open_output(Some(&path))?;
    out.write_all(bytes)?;
    finish(out)
}

fn with_file(
    dir: &Path,
    rel: &str,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let path = dir.join(rel);
    let mut out = open_output(Some(&path))?;
    body(&mut out)?;
    finish(out)
}

fn b(n: u64) -> Base {
    Base::new(n).expect("fixed bases are >= 2")
}

pub fn repro(args: ReproArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let dir = match cfg.resolve(args.dir, "dir")? {
        Some(d) => d,
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("repro")),
    };

    for family in [Family::Cvt, Family::Evt] {
        with_file(&dir, &format!("tables/{family}_dimensions.csv"), |out| {
            write_dims(out, family, b(2), b(29), false, true)
        })?;
    }

    // value tables small enough to read by eye
    for (t, n, depth) in [
        (TransformKind::Cvt, 2, 4),
        (TransformKind::Cvt, 3, 2),
        (TransformKind::Cvt, 4, 2),
        (TransformKind::Cvt, 5, 2),
        (TransformKind::EvtMax, 2, 4),
        (TransformKind::EvtMax, 3, 2),
        (TransformKind::EvtMax, 4, 2),
    ] {
        let spec = GridSpec::new(b(n), depth).map_err(usage("depth"))?;
        with_file(&dir, &format!("tables/{t}_base{n}_depth{depth}.csv"), |out| {
            write_table_csv(out, &spec, t, false)
        })?;
    }

    let bitmap = ImageSpec::new(ImageFormat::PbmBinary);
    for (family, n, depth, cell) in [
        (Family::Cvt, 2, 8, 1),
        (Family::Cvt, 3, 5, 1),
        (Family::Cvt, 4, 4, 1),
        (Family::Cvt, 5, 3, 2),
        (Family::Evt, 2, 8, 1),
        (Family::Evt, 3, 5, 1),
        (Family::Evt, 4, 4, 1),
    ] {
        let spec = GridSpec::new(b(n), depth).map_err(usage("depth"))?;
        let grid = indicator(&spec, &family.query()).map_err(usage("target"))?;
        let bytes = render_indicator(&grid, &bitmap.cell_pixels(cell)).map_err(usage("format"))?;
        write_file(&dir, &format!("figures/{family}_base{n}_depth{depth}.pbm"), &bytes)?;
    }
    for n in 2..=5 {
        for family in [Family::Cvt, Family::Evt] {
            let gen = carryfrac::ifs_generator(b(n), &family.query()).map_err(usage("base"))?;
            let bytes = render_indicator(&gen, &bitmap.cell_pixels(16)).map_err(usage("format"))?;
            write_file(&dir, &format!("figures/generators/{family}_base{n}.pbm"), &bytes)?;
        }
    }
    for (t, n, depth) in [(TransformKind::Cvt, 2, 6), (TransformKind::EvtMax, 2, 6)] {
        let spec = GridSpec::new(b(n), depth).map_err(usage("depth"))?;
        let table = build_table(&spec, t).map_err(usage("depth"))?;
        let bytes = render_table(&table, &ImageSpec::new(ImageFormat::PgmBinary).cell_pixels(4))
            .map_err(usage("format"))?;
        write_file(&dir, &format!("figures/{t}_base{n}_depth{depth}_table.pgm"), &bytes)?;
    }

    with_file(&dir, "increment.jsonl", |out| {
        for n in [3, 4] {
            let side = default_render_side(b(n)).map_err(usage("base"))?;
            let analysis = increment_analysis(b(n), side).map_err(usage("render-side"))?;
            write_increment(out, &analysis)?;
        }
        Ok(())
    })?;

    eprintln!("carryfrac: wrote artifacts under {}", dir.display());
    Ok(())
}
