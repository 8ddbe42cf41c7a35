//! JSON run configuration. See `docs/config.md` for the schema.
//!
//! Parsing goes through `serde_json::Value` by hand so that every error names
//! the offending field by its path (`family.mu.weights[2]`).

use kantorovich::parametric::{gallery, linear_grid, CostFn, ParamFamily};
use kantorovich::{CostSpec, Coupling, DiscreteMeasure, GroundCost, Matrix, Point, ShiftMap};
use serde_json::{Map, Value};

use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn err<T>(path: &str, msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config { path: path.to_string(), msg: msg.into() })
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().map_or_else(|| err(path, "expected an object"), Ok)
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().map_or_else(|| err(path, "expected an array"), Ok)
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().map_or_else(|| err(path, "expected a number"), Ok)
}

fn count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map_or_else(|| err(path, "expected a nonnegative integer"), |n| Ok(n as usize))
}

fn text<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().map_or_else(|| err(path, "expected a string"), Ok)
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).map_or_else(|| err(&join(path, key), "missing field"), Ok)
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>> {
    array(v, path)?.iter().enumerate().map(|(i, x)| number(x, &format!("{path}[{i}]"))).collect()
}

fn core<T>(path: &str, r: kantorovich::Result<T>) -> Result<T> {
    r.or_else(|e| err(path, e.to_string()))
}

/// A parsed configuration document plus the run seed.
#[derive(Debug, Clone)]
pub struct Config {
    root: Map<String, Value>,
    seed: u64,
}

impl Config {
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let root = object(&v, "<root>")?.clone();
        Ok(Config { root, seed })
    }

    pub fn empty(seed: u64) -> Self {
        Config { root: Map::new(), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The unparsed value under `key`.
    pub fn raw(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }

    pub fn has(&self, key: &str) -> bool {
        self.root.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        required(&self.root, key, "")
    }

    pub fn measure(&self, key: &str) -> Result<DiscreteMeasure> {
        parse_measure(self.get(key)?, key, self.seed)
    }

    pub fn cost(&self, key: &str) -> Result<CostSpec> {
        match self.root.get(key) {
            Some(v) => parse_cost(v, key),
            None => Ok(CostSpec::Euclidean),
        }
    }

    pub fn ground(&self, key: &str) -> Result<GroundCost> {
        match self.root.get(key) {
            Some(v) => parse_ground(v, key),
            None => Ok(GroundCost::Euclidean),
        }
    }

    pub fn coupling(&self, key: &str) -> Result<Coupling> {
        parse_coupling(self.get(key)?, key, self.seed)
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        self.root.get(key).map_or(Ok(default), |v| number(v, key))
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        number(self.get(key)?, key)
    }

    pub fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        self.root.get(key).map_or(Ok(default), |v| count(v, key))
    }

    pub fn text_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        self.root.get(key).map_or(Ok(default), |v| text(v, key))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.root.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().map_or_else(|| err(key, "expected true or false"), Ok),
        }
    }

    pub fn numbers_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.root.get(key).map_or_else(|| Ok(default.to_vec()), |v| numbers(v, key))
    }

    pub fn grid(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.root.get(key).map(|v| parse_grid(v, key)).transpose()
    }

    /// The `family` object, with `t_grid` at the top level overriding the
    /// family's own grid.
    pub fn family(&self) -> Result<ParamFamily> {
        let family = parse_family(self.get("family")?, "family", self.seed)?;
        match self.grid("t_grid")? {
            Some(g) => core("t_grid", family.with_grid(g)),
            None => Ok(family),
        }
    }
}

/// `{"points", "weights"}`, `{"grid": {"n", "interval"}}`,
/// `{"random": {"n", "dim", "seed"}}` or `{"dirac": point}`.
pub fn parse_measure(v: &Value, path: &str, seed: u64) -> Result<DiscreteMeasure> {
    let obj = object(v, path)?;
    if let Some(g) = obj.get("grid") {
        let gp = join(path, "grid");
        let g = object(g, &gp)?;
        let n = count(required(g, "n", &gp)?, &join(&gp, "n"))?;
        let (a, b) = match g.get("interval") {
            None => (0.0, 1.0),
            Some(iv) => {
                let ip = join(&gp, "interval");
                let xs = numbers(iv, &ip)?;
                if xs.len() != 2 {
                    return err(&ip, "expected [a, b]");
                }
                (xs[0], xs[1])
            }
        };
        return core(&gp, DiscreteMeasure::uniform_grid(n, a, b));
    }
    if let Some(r) = obj.get("random") {
        let rp = join(path, "random");
        let r = object(r, &rp)?;
        let n = count(required(r, "n", &rp)?, &join(&rp, "n"))?;
        let dim = r.get("dim").map_or(Ok(1), |d| count(d, &join(&rp, "dim")))?;
        let s = r
            .get("seed")
            .map_or(Ok(seed), |s| s.as_u64().map_or_else(|| err(&join(&rp, "seed"), "expected u64"), Ok))?;
        return core(&rp, DiscreteMeasure::random(n, dim, s));
    }
    if let Some(p) = obj.get("dirac") {
        let pp = join(path, "dirac");
        return Ok(DiscreteMeasure::dirac(parse_point(p, &pp)?));
    }
    let pp = join(path, "points");
    let points = array(required(obj, "points", path)?, &pp)?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_point(p, &format!("{pp}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let wp = join(path, "weights");
    let weights = numbers(required(obj, "weights", path)?, &wp)?;
    if weights.len() != points.len() {
        return err(&wp, format!("{} weights for {} points", weights.len(), points.len()));
    }
    core(path, DiscreteMeasure::new(points, weights))
}

/// A number (1-d point) or an array of coordinates.
fn parse_point(v: &Value, path: &str) -> Result<Point> {
    let coords = match v {
        Value::Number(_) => vec![number(v, path)?],
        _ => numbers(v, path)?,
    };
    core(path, Point::new(coords))
}

fn parse_matrix(v: &Value, path: &str) -> Result<Matrix> {
    let rows = array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, r)| numbers(r, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows).map_or_else(|| err(path, "rows must be nonempty and of equal length"), Ok)
}

fn parse_shift(v: Option<&Value>, path: &str) -> Result<ShiftMap> {
    match v.map(|m| text(m, path)).transpose()? {
        None | Some("identity") => Ok(ShiftMap::Identity),
        Some("reflection") => Ok(ShiftMap::Reflection),
        Some(other) => err(path, format!("unknown map {other:?}; expected \"identity\" or \"reflection\"")),
    }
}

/// `"euclidean"`, `"truncated"`, `{"power": p}`, `{"matrix": [[..]]}`,
/// `{"squared_shift": {"scale", "map"}}` or `{"diagonal_switch": {"t"}}`.
pub fn parse_cost(v: &Value, path: &str) -> Result<CostSpec> {
    if let Some(s) = v.as_str() {
        return match s {
            "euclidean" => Ok(CostSpec::Euclidean),
            "truncated" => Ok(CostSpec::Truncated),
            other => err(path, format!("unknown cost {other:?}")),
        };
    }
    let obj = object(v, path)?;
    let (key, inner) = single_key(obj, path)?;
    let ip = join(path, key);
    match key {
        "power" => Ok(CostSpec::Power(number(inner, &ip)?)),
        "matrix" => Ok(CostSpec::Matrix(parse_matrix(inner, &ip)?)),
        "squared_shift" => {
            let o = object(inner, &ip)?;
            let scale = number(required(o, "scale", &ip)?, &join(&ip, "scale"))?;
            Ok(CostSpec::SquaredShift { scale, map: parse_shift(o.get("map"), &join(&ip, "map"))? })
        }
        "diagonal_switch" => {
            let o = object(inner, &ip)?;
            Ok(CostSpec::DiagonalSwitch { t: number(required(o, "t", &ip)?, &join(&ip, "t"))? })
        }
        other => err(path, format!("unknown cost {other:?}")),
    }
}

fn single_key<'a>(obj: &'a Map<String, Value>, path: &str) -> Result<(&'a str, &'a Value)> {
    let mut it = obj.iter();
    match (it.next(), it.next()) {
        (Some((k, v)), None) => Ok((k.as_str(), v)),
        _ => err(path, "expected an object with exactly one key"),
    }
}

/// `"euclidean"`, `"truncated"` or `{"power": p}`.
pub fn parse_ground(v: &Value, path: &str) -> Result<GroundCost> {
    match parse_cost(v, path)? {
        CostSpec::Euclidean => Ok(GroundCost::Euclidean),
        CostSpec::Truncated => Ok(GroundCost::Truncated),
        CostSpec::Power(p) if p >= 1.0 => Ok(GroundCost::Power(p)),
        CostSpec::Power(p) => err(path, format!("power ground cost needs p >= 1, got {p}")),
        _ => err(path, "ground cost must be \"euclidean\", \"truncated\" or {\"power\": p}"),
    }
}

/// `{"row": measure, "col": measure, "mass": [[..]]}`.
pub fn parse_coupling(v: &Value, path: &str, seed: u64) -> Result<Coupling> {
    let obj = object(v, path)?;
    let row = parse_measure(required(obj, "row", path)?, &join(path, "row"), seed)?;
    let col = parse_measure(required(obj, "col", path)?, &join(path, "col"), seed)?;
    let mp = join(path, "mass");
    let mass = parse_matrix(required(obj, "mass", path)?, &mp)?;
    if mass.shape() != (row.len(), col.len()) {
        return err(
            &mp,
            format!("mass is {}x{}, marginals have {}x{} atoms", mass.rows(), mass.cols(), row.len(), col.len()),
        );
    }
    core(path, Coupling::new(row, col, mass))
}

/// An array of values or `{"linspace": {"from", "to", "points"}}`.
pub fn parse_grid(v: &Value, path: &str) -> Result<Vec<f64>> {
    if let Some(obj) = v.as_object() {
        let lp = join(path, "linspace");
        let l = object(required(obj, "linspace", path)?, &lp)?;
        let from = number(required(l, "from", &lp)?, &join(&lp, "from"))?;
        let to = number(required(l, "to", &lp)?, &join(&lp, "to"))?;
        let points = count(required(l, "points", &lp)?, &join(&lp, "points"))?;
        if points == 0 {
            return err(&join(&lp, "points"), "must be at least 1");
        }
        return Ok(linear_grid(from, to, points));
    }
    numbers(v, path)
}

/// `{"gallery": name, "n": n}` or `{"mu", "nu", "cost", "t_grid"}` with a
/// parametric cost: `"diagonal_switch"` (uses `t`), `{"squared_shift":
/// {"map"}}` (scale `t`) or `{"fixed": cost}`.
pub fn parse_family(v: &Value, path: &str, seed: u64) -> Result<ParamFamily> {
    let obj = object(v, path)?;
    if let Some(name) = obj.get("gallery") {
        let name = text(name, &join(path, "gallery"))?;
        let n = obj.get("n").map_or(Ok(8), |n| count(n, &join(path, "n")))?;
        return core(path, gallery(name, n));
    }
    let mu = parse_measure(required(obj, "mu", path)?, &join(path, "mu"), seed)?;
    let nu = parse_measure(required(obj, "nu", path)?, &join(path, "nu"), seed)?;
    let cp = join(path, "cost");
    let cv = required(obj, "cost", path)?;
    let cost: CostFn = match cv.as_str() {
        Some("diagonal_switch") => Box::new(|t| CostSpec::DiagonalSwitch { t }),
        Some(other) => return err(&cp, format!("unknown parametric cost {other:?}")),
        None => {
            let (key, inner) = single_key(object(cv, &cp)?, &cp)?;
            let ip = join(&cp, key);
            match key {
                "squared_shift" => {
                    let map = parse_shift(object(inner, &ip)?.get("map"), &join(&ip, "map"))?;
                    Box::new(move |t| CostSpec::SquaredShift { scale: t, map })
                }
                "fixed" => {
                    let c = parse_cost(inner, &ip)?;
                    Box::new(move |_| c.clone())
                }
                other => return err(&cp, format!("unknown parametric cost {other:?}")),
            }
        }
    };
    let gp = join(path, "t_grid");
    let grid = parse_grid(required(obj, "t_grid", path)?, &gp)?;
    core(&gp, ParamFamily::fixed_marginals(grid, mu, nu, cost))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(text: &str) -> String {
        Config::parse(text, 0).and_then(|c| c.measure("mu")).unwrap_err().to_string()
    }

    #[test]
    fn measures() {
        let c = Config::parse(r#"{"mu": {"points": [0, [1]], "weights": [1, 3]}}"#, 0).unwrap();
        let m = c.measure("mu").unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
        let c = Config::parse(r#"{"mu": {"grid": {"n": 4, "interval": [0, 2]}}}"#, 0).unwrap();
        assert_eq!(c.measure("mu").unwrap().points()[0], Point::scalar(0.25));
        let c = Config::parse(r#"{"mu": {"random": {"n": 3, "dim": 2}}}"#, 9).unwrap();
        assert_eq!(c.measure("mu").unwrap(), DiscreteMeasure::random(3, 2, 9).unwrap());
    }

    #[test]
    fn diagnostics_name_fields() {
        assert!(diag(r#"{"mu": {"points": [0, 1]}}"#).contains("mu.weights"));
        assert!(diag(r#"{"mu": {"points": [0, "x"], "weights": [1, 1]}}"#).contains("mu.points[1]"));
        assert!(diag(r#"{"nu": 1}"#).contains("mu"));
        let e = diag("{\n  \"mu\": [1,\n}");
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn costs_and_grids() {
        let c = Config::parse(
            r#"{"cost": {"squared_shift": {"scale": 0.5, "map": "reflection"}}, "alpha": {"power": 2},
                "t_grid": {"linspace": {"from": -1, "to": 1, "points": 5}}}"#,
            0,
        )
        .unwrap();
        assert_eq!(c.cost("cost").unwrap(), CostSpec::SquaredShift { scale: 0.5, map: ShiftMap::Reflection });
        assert_eq!(c.ground("alpha").unwrap(), GroundCost::Power(2.0));
        assert_eq!(c.grid("t_grid").unwrap().unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let bad = Config::parse(r#"{"cost": {"power": 2, "matrix": []}}"#, 0).unwrap();
        assert!(bad.cost("cost").unwrap_err().to_string().contains("exactly one key"));
    }

    #[test]
    fn families() {
        let c = Config::parse(r#"{"family": {"gallery": "example-A", "n": 4}, "t_grid": [-0.1, 0.1]}"#, 0).unwrap();
        assert_eq!(c.family().unwrap().t_grid(), &[-0.1, 0.1]);
        let c = Config::parse(
            r#"{"family": {"mu": {"grid": {"n": 3}}, "nu": {"grid": {"n": 3}}, "cost": {"squared_shift": {}}, "t_grid": [0, 1]}}"#,
            0,
        )
        .unwrap();
        assert_eq!(c.family().unwrap().cost_at(0.5), CostSpec::SquaredShift { scale: 0.5, map: ShiftMap::Identity });
        let c = Config::parse(r#"{"family": {"gallery": "nope"}}"#, 0).unwrap();
        assert!(c.family().is_err());
    }
}
