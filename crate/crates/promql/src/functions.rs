//! Catalogue of built-in PromQL functions and their argument types.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Scalar,
    String,
    Vector,
    Matrix,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Scalar => "scalar",
            ValueType::String => "string",
            ValueType::Vector => "instant vector",
            ValueType::Matrix => "range vector",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Signature {
    pub name: &'static str,
    pub args: &'static [ValueType],
    /// Trailing arguments that may be omitted.
    pub optional: usize,
    /// Last argument may repeat any number of times (including zero).
    pub variadic: bool,
    pub returns: ValueType,
}

impl Signature {
    pub fn min_args(&self) -> usize {
        if self.variadic {
            self.args.len() - 1
        } else {
            self.args.len() - self.optional
        }
    }

    pub fn max_args(&self) -> Option<usize> {
        (!self.variadic).then_some(self.args.len())
    }

    pub fn arg_type(&self, i: usize) -> Option<ValueType> {
        self.args
            .get(i)
            .copied()
            .or_else(|| self.variadic.then(|| *self.args.last().unwrap()))
    }
}

use ValueType::{Matrix as M, Scalar as S, String as Str, Vector as V};

macro_rules! sig {
    ($name:literal, [$($a:expr),*], $ret:expr) => {
        Signature { name: $name, args: &[$($a),*], optional: 0, variadic: false, returns: $ret }
    };
    ($name:literal, [$($a:expr),*], opt $o:literal, $ret:expr) => {
        Signature { name: $name, args: &[$($a),*], optional: $o, variadic: false, returns: $ret }
    };
    ($name:literal, [$($a:expr),*], variadic, $ret:expr) => {
        Signature { name: $name, args: &[$($a),*], optional: 0, variadic: true, returns: $ret }
    };
}

static FUNCTIONS: &[Signature] = &[
    sig!("abs", [V], V),
    sig!("absent", [V], V),
    sig!("absent_over_time", [M], V),
    sig!("acos", [V], V),
    sig!("acosh", [V], V),
    sig!("asin", [V], V),
    sig!("asinh", [V], V),
    sig!("atan", [V], V),
    sig!("atanh", [V], V),
    sig!("avg_over_time", [M], V),
    sig!("ceil", [V], V),
    sig!("changes", [M], V),
    sig!("clamp", [V, S, S], V),
    sig!("clamp_max", [V, S], V),
    sig!("clamp_min", [V, S], V),
    sig!("cos", [V], V),
    sig!("cosh", [V], V),
    sig!("count_over_time", [M], V),
    sig!("day_of_month", [V], opt 1, V),
    sig!("day_of_week", [V], opt 1, V),
    sig!("day_of_year", [V], opt 1, V),
    sig!("days_in_month", [V], opt 1, V),
    sig!("deg", [V], V),
    sig!("delta", [M], V),
    sig!("deriv", [M], V),
    sig!("exp", [V], V),
    sig!("floor", [V], V),
    sig!("histogram_count", [V], V),
    sig!("histogram_fraction", [S, S, V], V),
    sig!("histogram_quantile", [S, V], V),
    sig!("histogram_stddev", [V], V),
    sig!("histogram_stdvar", [V], V),
    sig!("histogram_sum", [V], V),
    sig!("holt_winters", [M, S, S], V),
    sig!("hour", [V], opt 1, V),
    sig!("idelta", [M], V),
    sig!("increase", [M], V),
    sig!("irate", [M], V),
    sig!("label_join", [V, Str, Str, Str], variadic, V),
    sig!("label_replace", [V, Str, Str, Str, Str], V),
    sig!("last_over_time", [M], V),
    sig!("ln", [V], V),
    sig!("log10", [V], V),
    sig!("log2", [V], V),
    sig!("max_over_time", [M], V),
    sig!("min_over_time", [M], V),
    sig!("minute", [V], opt 1, V),
    sig!("month", [V], opt 1, V),
    sig!("pi", [], S),
    sig!("predict_linear", [M, S], V),
    sig!("present_over_time", [M], V),
    sig!("quantile_over_time", [S, M], V),
    sig!("rad", [V], V),
    sig!("rate", [M], V),
    sig!("resets", [M], V),
    sig!("round", [V, S], opt 1, V),
    sig!("scalar", [V], S),
    sig!("sgn", [V], V),
    sig!("sin", [V], V),
    sig!("sinh", [V], V),
    sig!("sort", [V], V),
    sig!("sort_desc", [V], V),
    sig!("sqrt", [V], V),
    sig!("stddev_over_time", [M], V),
    sig!("stdvar_over_time", [M], V),
    sig!("sum_over_time", [M], V),
    sig!("tan", [V], V),
    sig!("tanh", [V], V),
    sig!("time", [], S),
    sig!("timestamp", [V], V),
    sig!("vector", [S], V),
    sig!("year", [V], opt 1, V),
];

pub fn lookup(name: &str) -> Option<&'static Signature> {
    FUNCTIONS.iter().find(|s| s.name == name)
}

pub fn all() -> &'static [Signature] {
    FUNCTIONS
}
