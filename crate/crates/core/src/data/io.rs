use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{City, CityTable, Dataset, MobilityData, TimeSeriesPanel, MIN_POPULATION};
use crate::error::{Error, Result};

/// Locations of the files making up a dataset. Panels are optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub cities: PathBuf,
    pub commute: PathBuf,
    pub education: PathBuf,
    pub distance: PathBuf,
    pub isolation: Option<PathBuf>,
    pub baseline_isolation: Option<PathBuf>,
    pub icu_total: Option<PathBuf>,
    pub icu_available: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub deaths: Option<PathBuf>,
}

impl DatasetPaths {
    /// Standard file names inside `dir`; optional panels are picked up only
    /// if the file exists.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        DatasetPaths {
            cities: dir.join("cities.csv"),
            commute: dir.join("commute.csv"),
            education: dir.join("education.csv"),
            distance: dir.join("distance.csv"),
            isolation: opt("isolation.csv"),
            baseline_isolation: opt("baseline_isolation.csv"),
            icu_total: opt("icu_total.csv"),
            icu_available: opt("icu_available.csv"),
            cases: opt("cases.csv"),
            deaths: opt("deaths.csv"),
        }
    }

    /// Every path that is set, required files first.
    pub fn existing(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = vec![&self.cities, &self.commute, &self.education, &self.distance];
        out.extend(
            [
                &self.isolation,
                &self.baseline_isolation,
                &self.icu_total,
                &self.icu_available,
                &self.cases,
                &self.deaths,
            ]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    /// Turn the minimum-population warning into a hard error.
    pub strict_population: bool,
}

#[derive(Debug, Deserialize, Serialize)]
struct CityRow {
    id: i64,
    name: String,
    population: u64,
    lat: f64,
    lon: f64,
    region: usize,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line() as usize).unwrap_or(0);
    let (column, message) = match err.kind() {
        csv::ErrorKind::Deserialize { err: de, .. } => {
            (de.field().map(|f| f as usize + 1).unwrap_or(0), de.to_string())
        }
        _ => (0, err.to_string()),
    };
    Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    }
}

fn read_cities(path: &Path) -> Result<CityTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["id", "name", "population", "lat", "lon", "region"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            column: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut cities = Vec::new();
    for row in reader.deserialize::<CityRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        cities.push(City {
            code: row.id,
            name: row.name,
            population: row.population,
            lat: row.lat,
            lon: row.lon,
            region: row.region,
        });
    }
    CityTable::new(cities)
}

/// Reads a headerless numeric CSV. Lines starting with `#` are skipped and
/// every row must have the same number of fields.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(open(path)?);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(rows + 1);
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: record.len().min(c) + 1,
                    message: format!("expected {c} values, found {}", record.len()),
                })
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: j + 1,
                    message: "missing value".into(),
                });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        column: 0,
        message: e.to_string(),
    })
}

/// Reads a single-column CSV.
pub fn read_vector(path: &Path) -> Result<Array1<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            column: 2,
            message: format!("expected a single column, found {}", m.ncols()),
        });
    }
    Ok(m.column(0).to_owned())
}

/// Writes a matrix using the shortest decimal form that reads back to the
/// same `f64`.
pub fn write_matrix<W: Write>(out: &mut W, m: &Array2<f64>) -> std::io::Result<()> {
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            first = false;
            write!(out, "{v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn write_matrix_file(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    write_matrix(&mut w, m)
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Loads and validates a dataset. Returns the dataset together with
/// human-readable warnings (currently: cities under the population floor).
pub fn load_dataset(paths: &DatasetPaths, options: &LoadOptions) -> Result<(Dataset, Vec<String>)> {
    let cities = read_cities(&paths.cities)?;
    let mobility = MobilityData::new(
        read_matrix(&paths.commute)?,
        read_matrix(&paths.education)?,
        read_matrix(&paths.distance)?,
    )?;

    let isolation = paths.isolation.as_deref().map(read_matrix).transpose()?;
    let baseline = paths.baseline_isolation.as_deref().map(read_vector).transpose()?;
    let icu_total = paths.icu_total.as_deref().map(read_matrix).transpose()?;
    let icu_available = paths.icu_available.as_deref().map(read_matrix).transpose()?;
    let cases = paths.cases.as_deref().map(read_matrix).transpose()?;
    let deaths = paths.deaths.as_deref().map(read_matrix).transpose()?;

    let weeks = [&isolation, &icu_total, &icu_available, &cases, &deaths]
        .into_iter()
        .flatten()
        .map(|m| m.ncols())
        .next()
        .unwrap_or(0);
    let mut panel = TimeSeriesPanel::new(weeks);
    match (isolation, baseline) {
        (Some(iso), Some(base)) => panel = panel.with_isolation(iso, base)?,
        (None, None) => {}
        (Some(_), None) => {
            return Err(Error::validation(
                "isolation.csv given without baseline_isolation.csv",
                None,
            ))
        }
        (None, Some(_)) => {
            return Err(Error::validation(
                "baseline_isolation.csv given without isolation.csv",
                None,
            ))
        }
    }
    match (icu_total, icu_available) {
        (Some(t), Some(a)) => panel = panel.with_icu(t, a)?,
        (None, None) => {}
        _ => {
            return Err(Error::validation(
                "icu_total.csv and icu_available.csv must be given together",
                None,
            ))
        }
    }
    if let Some(c) = cases {
        panel = panel.with_cases(c)?;
    }
    if let Some(d) = deaths {
        panel = panel.with_deaths(d)?;
    }

    let dataset = Dataset::new(cities, mobility, panel)?;

    let mut warnings = Vec::new();
    let small = dataset.cities.below_population(MIN_POPULATION);
    if let Some(&first) = small.first() {
        if options.strict_population {
            return Err(Error::validation(
                format!("population below {MIN_POPULATION}"),
                Some(first),
            ));
        }
        warnings.push(format!(
            "{} cities have population below {MIN_POPULATION} (first: city {first})",
            small.len()
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((dataset, warnings))
}

/// Writes `dataset` into `dir` with the standard file names.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<DatasetPaths> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let cities_path = dir.join("cities.csv");
    {
        let mut writer = csv::Writer::from_writer(create(&cities_path)?);
        for c in dataset.cities.cities() {
            writer
                .serialize(CityRow {
                    id: c.code,
                    name: c.name.clone(),
                    population: c.population,
                    lat: c.lat,
                    lon: c.lon,
                    region: c.region,
                })
                .map_err(|e| csv_error(&cities_path, e))?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: cities_path.clone(),
            source,
        })?;
    }
    let m = &dataset.mobility;
    write_matrix_file(&dir.join("commute.csv"), m.commute())?;
    write_matrix_file(&dir.join("education.csv"), m.education())?;
    write_matrix_file(&dir.join("distance.csv"), m.distance())?;

    let p = &dataset.panel;
    if let (Ok(iso), Ok(base)) = (p.isolation(), p.baseline_isolation()) {
        write_matrix_file(&dir.join("isolation.csv"), iso)?;
        let col = base.clone().insert_axis(ndarray::Axis(1));
        write_matrix_file(&dir.join("baseline_isolation.csv"), &col)?;
    }
    if let (Ok(t), Ok(a)) = (p.icu_total(), p.icu_available()) {
        write_matrix_file(&dir.join("icu_total.csv"), t)?;
        write_matrix_file(&dir.join("icu_available.csv"), a)?;
    }
    if let Ok(c) = p.cases() {
        write_matrix_file(&dir.join("cases.csv"), c)?;
    }
    if let Ok(d) = p.deaths() {
        write_matrix_file(&dir.join("deaths.csv"), d)?;
    }
    Ok(DatasetPaths::in_dir(dir))
}
