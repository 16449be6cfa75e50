use crate::block::ValueType;
use crate::ea::{Individual, Population};
use crate::numfmt::format_number;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Boolean(bool),
    Text(String),
    Individual(Individual),
    Population(Population),
    List(Vec<f64>),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Number(_) => ValueType::Number,
            Value::Boolean(_) => ValueType::Boolean,
            Value::Text(_) => ValueType::Text,
            Value::Individual(_) => ValueType::Individual,
            Value::Population(_) => ValueType::Population,
            Value::List(_) => ValueType::ListOfNumber,
        }
    }

    /// Text form used by `to_text`; lists and populations join with commas.
    pub fn to_text(&self) -> String {
        match self {
            Value::Number(x) => format_number(*x),
            Value::Boolean(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Individual(x) => x.to_string(),
            Value::Population(p) => p.to_string(),
            Value::List(xs) => xs.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(","),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms() {
        assert_eq!(Value::Number(20.0).to_text(), "20");
        assert_eq!(Value::Boolean(false).to_text(), "false");
        assert_eq!(Value::List(vec![1.0, 0.5]).to_text(), "1,0.5");
        assert_eq!(Value::Population(Population::parse("01,10").unwrap()).to_text(), "01,10");
        assert_eq!(Value::List(vec![]).to_text(), "");
        assert_eq!(Value::List(vec![]).value_type(), ValueType::ListOfNumber);
    }
}
