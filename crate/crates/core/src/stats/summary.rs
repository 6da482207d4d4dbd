//! Regression tables: rounded text with stars and standard errors beneath,
//! plus a long-format CSV at full precision.

use super::{significance_stars, RegressionFit, StarScheme};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub text: String,
    pub csv: String,
}

const TEXT_DECIMALS: usize = 4;

pub fn summarize(fit: &RegressionFit, scheme: StarScheme) -> Summary {
    summarize_many(&[("(1)", fit)], scheme)
}

/// Side-by-side table, one column per fit; rows are coefficient names in
/// order of first appearance.
pub fn summarize_many(fits: &[(&str, &RegressionFit)], scheme: StarScheme) -> Summary {
    let mut terms: Vec<&str> = Vec::new();
    for (_, fit) in fits {
        for c in &fit.coefficients {
            if !terms.contains(&c.name.as_str()) {
                terms.push(&c.name);
            }
        }
    }

    let mut body: Vec<Vec<String>> = Vec::new();
    body.push(
        std::iter::once(String::new())
            .chain(fits.iter().map(|(l, _)| l.to_string()))
            .collect(),
    );
    let mut rules = vec![0, 1];
    for term in &terms {
        let mut est = vec![term.to_string()];
        let mut se = vec![String::new()];
        for (_, fit) in fits {
            match fit.get(term) {
                Some(c) => {
                    est.push(format!(
                        "{:.*}{}",
                        TEXT_DECIMALS,
                        c.estimate,
                        significance_stars(c.p_value, scheme)
                    ));
                    se.push(format!("({:.*})", TEXT_DECIMALS, c.std_error));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        body.push(est);
        body.push(se);
    }
    rules.push(body.len());
    type Cell = fn(&RegressionFit) -> String;
    let footer: [(&str, Cell); 3] = [
        ("N", |f| f.n.to_string()),
        ("BIC", |f| format!("{:.2}", f.bic)),
        ("Log-Likelihood", |f| format!("{:.2}", f.log_likelihood)),
    ];
    for (label, value) in footer {
        body.push(
            std::iter::once(label.to_string())
                .chain(fits.iter().map(|(_, f)| value(f)))
                .collect(),
        );
    }

    let widths: Vec<usize> = (0..=fits.len())
        .map(|j| body.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let total = widths.iter().sum::<usize>() + 2 * fits.len();
    let mut text = String::new();
    for (i, row) in body.iter().enumerate() {
        if rules.contains(&i) {
            text.push_str(&"-".repeat(total));
            text.push('\n');
        }
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (cell, w) in row[1..].iter().zip(&widths[1..]) {
            line.push_str(&format!("  {cell:>w$}"));
        }
        text.push_str(line.trim_end());
        text.push('\n');
    }
    text.push_str(&"-".repeat(total));
    text.push('\n');
    text.push_str(&format!(
        "Standard errors in parentheses. {}\n",
        scheme.legend()
    ));

    let mut csv = String::from("model,term,estimate,std_error,t_stat,p_value,stars\n");
    for (label, fit) in fits {
        for c in &fit.coefficients {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(label),
                csv_field(&c.name),
                c.estimate,
                c.std_error,
                c.t_stat,
                c.p_value,
                significance_stars(c.p_value, scheme)
            ));
        }
        csv.push_str(&format!("{},N,{},,,,\n", csv_field(label), fit.n));
        csv.push_str(&format!("{},BIC,{},,,,\n", csv_field(label), fit.bic));
        csv.push_str(&format!(
            "{},Log-Likelihood,{},,,,\n",
            csv_field(label),
            fit.log_likelihood
        ));
    }
    Summary { text, csv }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
