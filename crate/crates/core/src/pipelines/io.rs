//! Binary graymaps (P5), field CSV and symbol series text.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::pipelines::eca::EcaField;
use crate::pipelines::image::GreyImage;
use crate::pipelines::render::ComplexityField;

pub fn write_pgm<W: Write>(img: &GreyImage, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(img.pixels())?;
    Ok(())
}

fn next_token(data: &[u8], pos: &mut usize) -> Result<String> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated graymap header".into()));
    }
    Ok(String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

fn header_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(data, pos)?;
    tok.parse()
        .map_err(|_| Error::Format(format!("invalid graymap {what}: {tok:?}")))
}

/// Reads an 8-bit binary graymap; header comments are skipped.
pub fn read_pgm<R: Read>(mut input: R) -> Result<GreyImage> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut pos = 0;
    if next_token(&data, &mut pos)? != "P5" {
        return Err(Error::Format("not a binary graymap (magic P5 expected)".into()));
    }
    let width = header_number(&data, &mut pos, "width")?;
    let height = header_number(&data, &mut pos, "height")?;
    let maxval = header_number(&data, &mut pos, "maximum value")?;
    if maxval != 255 {
        return Err(Error::Format(format!("only 8-bit graymaps are supported, maximum value {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height;
    if data.len() < pos + n {
        return Err(Error::Format(format!(
            "graymap raster truncated: {} of {n} bytes",
            data.len().saturating_sub(pos)
        )));
    }
    GreyImage::new(width, height, data[pos..pos + n].to_vec())
}

/// Cells rendered 0 -> white, 1 -> black.
pub fn eca_to_image(field: &EcaField) -> GreyImage {
    let px = field.cells().iter().map(|&c| if c == 1 { 0 } else { 255 }).collect();
    GreyImage::new(field.width(), field.steps(), px).expect("field dimensions are valid")
}

/// One row per line, margins as empty fields.
pub fn field_to_csv(f: &ComplexityField) -> String {
    let mut out = String::new();
    for y in 0..f.height() {
        for x in 0..f.width() {
            if x > 0 {
                out.push(',');
            }
            if let Some(v) = f.get(x, y) {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// Symbol series with its inferred alphabet (sorted tokens; codes are
/// positions in it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSeries {
    pub codes: Vec<u32>,
    pub alphabet: Vec<String>,
}

/// Whitespace-separated tokens, or one symbol per character when the text
/// is a single token.
pub fn parse_symbol_series(text: &str) -> Result<SymbolSeries> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let tokens: Vec<String> = match tokens.len() {
        0 => return Err(Error::Format("symbol series is empty".into())),
        1 => tokens[0].chars().map(String::from).collect(),
        _ => tokens.into_iter().map(String::from).collect(),
    };
    let alphabet: Vec<String> = tokens.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let codes = tokens
        .iter()
        .map(|t| alphabet.binary_search(t).unwrap() as u32)
        .collect();
    Ok(SymbolSeries { codes, alphabet })
}
