use std::io::{BufRead, Write};

use super::{IdfModel, SparseVector, Vocabulary};
use crate::error::{Error, Result};
use crate::fmt::{escape_tsv, format_sig, unescape_tsv};

const WEIGHT_DIGITS: usize = 9;

fn io_err(source: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(source, e)
}

fn format_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

/// One word per line in dimension order.
pub fn write_vocabulary<W: Write>(mut w: W, vocab: &Vocabulary) -> std::io::Result<()> {
    for word in &vocab.words {
        writeln!(w, "{word}")?;
    }
    Ok(())
}

pub fn read_vocabulary<R: BufRead>(reader: R, source: &str) -> Result<Vocabulary> {
    let words = reader
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.is_empty()))
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(io_err(source))?;
    let n = words.len();
    Ok(Vocabulary::from_words(words, 0, n))
}

/// `word \t doc_freq \t idf`, preceded by a `# documents \t N` line.
pub fn write_idf<W: Write>(mut w: W, vocab: &Vocabulary, idf: &IdfModel) -> std::io::Result<()> {
    writeln!(w, "# documents\t{}", idf.collection_size)?;
    for (i, word) in vocab.words.iter().enumerate() {
        writeln!(w, "{word}\t{}\t{}", idf.doc_freq[i], idf.idf[i])?;
    }
    Ok(())
}

/// Reads an IDF file written for `vocab`; the word order must agree.
pub fn read_idf<R: BufRead>(reader: R, source: &str, vocab: &Vocabulary) -> Result<IdfModel> {
    let mut model = IdfModel::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(source))?;
        if let Some(n) = line.strip_prefix("# documents\t") {
            model.collection_size = n
                .parse()
                .map_err(|_| format_err(source, i + 1, "bad document count"))?;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [word, df, idf] = fields[..] else {
            return Err(format_err(source, i + 1, "expected `word \\t doc_freq \\t idf`"));
        };
        let dim = model.idf.len();
        if vocab.word(dim as u32) != Some(word) {
            return Err(format_err(source, i + 1, format!("`{word}` is not vocabulary word {dim}")));
        }
        match (df.parse::<u32>(), idf.parse::<f64>()) {
            (Ok(df), Ok(idf)) => {
                model.doc_freq.push(df);
                model.idf.push(idf);
            }
            _ => return Err(format_err(source, i + 1, "bad doc_freq or idf")),
        }
    }
    if model.idf.len() != vocab.len() {
        return Err(format_err(
            source,
            0,
            format!("{} IDF rows for {} vocabulary words", model.idf.len(), vocab.len()),
        ));
    }
    Ok(model)
}

/// `url \t dim:weight …` with weights at 9 significant digits.
pub fn write_vectors<'a, W: Write>(
    mut w: W,
    vectors: impl IntoIterator<Item = &'a SparseVector>,
) -> std::io::Result<()> {
    for v in vectors {
        write!(w, "{}\t", escape_tsv(&v.doc_url))?;
        for (i, (dim, weight)) in v.entries.iter().enumerate() {
            if i > 0 {
                w.write_all(b" ")?;
            }
            write!(w, "{dim}:{}", format_sig(*weight, WEIGHT_DIGITS))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_vectors<R: BufRead>(reader: R, source: &str) -> Result<Vec<SparseVector>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(source))?;
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| format_err(source, i + 1, m);
        let (url, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab after url"))?;
        let mut entries = Vec::new();
        for item in rest.split_whitespace() {
            let (d, wt) = item.split_once(':').ok_or_else(|| bad("expected dim:weight"))?;
            let d: u32 = d.parse().map_err(|_| bad("bad dimension"))?;
            let wt: f64 = wt.parse().map_err(|_| bad("bad weight"))?;
            if entries.last().is_some_and(|&(prev, _)| prev >= d) {
                return Err(bad("dimensions must be strictly increasing"));
            }
            entries.push((d, wt));
        }
        out.push(SparseVector {
            doc_url: unescape_tsv(url).into_owned(),
            entries,
            norm_applied: true,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorspace::{compute_idf, vectorize};

    #[test]
    fn round_trips() {
        let docs: Vec<Vec<String>> = ["a b b c", "b c", "c d"]
            .iter()
            .map(|d| d.split(' ').map(String::from).collect())
            .collect();
        let vocab = crate::vectorspace::build_vocabulary(docs.iter().map(Vec::as_slice), 0, 10, None);
        let idf = compute_idf(docs.iter().map(Vec::as_slice), &vocab).unwrap();

        let mut buf = Vec::new();
        write_vocabulary(&mut buf, &vocab).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "b\nc\na\nd\n");
        let v2 = read_vocabulary(buf.as_slice(), "v").unwrap();
        assert_eq!(v2.words, vocab.words);

        let mut buf = Vec::new();
        write_idf(&mut buf, &vocab, &idf).unwrap();
        assert_eq!(read_idf(buf.as_slice(), "i", &vocab).unwrap(), idf);

        let vecs: Vec<SparseVector> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| vectorize(&format!("http://x/{i}\tt"), d, &vocab, &idf))
            .chain([SparseVector { doc_url: "e".into(), entries: vec![], norm_applied: true }])
            .collect();
        let mut buf = Vec::new();
        write_vectors(&mut buf, &vecs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.ends_with("e\t\n"));
        let back = read_vectors(buf.as_slice(), "x").unwrap();
        assert_eq!(back.len(), vecs.len());
        for (a, b) in back.iter().zip(&vecs) {
            assert_eq!(a.doc_url, b.doc_url);
            for (x, y) in a.entries.iter().zip(&b.entries) {
                assert_eq!(x.0, y.0);
                assert!((x.1 - y.1).abs() <= 1e-9 * y.1);
            }
        }
        let mut again = Vec::new();
        write_vectors(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn malformed_vector_lines() {
        assert!(matches!(read_vectors("u 1:2\n".as_bytes(), "v"), Err(Error::Format { line: 1, .. })));
        assert!(matches!(read_vectors("u\t2:1 1:1\n".as_bytes(), "v"), Err(Error::Format { .. })));
        assert!(matches!(read_vectors("u\tx:1\n".as_bytes(), "v"), Err(Error::Format { .. })));
    }
}
