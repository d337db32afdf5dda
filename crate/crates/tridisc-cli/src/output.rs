//! Deterministic output encoding: 17-significant-digit numbers, CSV
//! assembly, binary PGM images, and JSON sidecars. Everything here is a
//! pure function of its inputs so outputs are byte-identical across
//! runs and worker counts.

use std::path::Path;

use num_complex::Complex64;

use crate::CliError;

/// Exact column lines of the three CSV products.
pub const ORBITS_HEADER: &str = "word,domain,m,T,Lambda,sign,residual";
pub const RESONANCES_HEADER: &str = "re,im,band,order,residual,res_Z1_re,res_Z1_im";
pub const DISTRIBUTION_HEADER: &str = "q,p,value_re,value_im,in_sigma1";
/// The zeta table is not part of the pinned interface but follows the
/// same conventions.
pub const ZETA_HEADER: &str = "re,im,z_re,z_im,tail";

/// Formats a float with 17 significant digits (scientific notation),
/// enough to reparse the exact same `f64`.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance stamped into every output file: tool version, hash of the
/// scientific config content, and the cycle-length truncation.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub version: &'static str,
    pub config_hash: String,
    pub n_max: usize,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!(
            "# tridisc {} config_sha256={} n_max={}",
            self.version, self.config_hash, self.n_max
        )
    }
}

/// Joins provenance, header and data rows into one CSV body.
pub fn csv_body(prov: &Provenance, header: &str, rows: &[String]) -> String {
    let mut body = String::new();
    body.push_str(&prov.comment());
    body.push('\n');
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(row);
        body.push('\n');
    }
    body
}

/// Encodes a binary (P5) PGM of the real parts. `re` is row-major with
/// the momentum index ascending and `q` fastest; the image flips rows so
/// row 0 is `p = +1`, while column 0 stays `q = -pi`. Pixels map the
/// observed range onto `0..=255`; a constant grid renders mid-gray.
/// Returns the bytes with the normalization bounds for the sidecar.
pub fn pgm_bytes(
    n_q: usize,
    n_p: usize,
    re: &[f64],
    prov: &Provenance,
) -> Result<(Vec<u8>, f64, f64), CliError> {
    if n_q == 0 || n_p == 0 || re.len() != n_q * n_p {
        return Err(CliError::Config(format!(
            "image shape {n_q}x{n_p} does not match {} values",
            re.len()
        )));
    }
    if re.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("image values must be finite".into()));
    }
    let v_min = re.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut bytes = Vec::with_capacity(n_q * n_p + 128);
    bytes.extend_from_slice(format!("P5\n{}\n{n_q} {n_p}\n255\n", prov.comment()).as_bytes());
    for j in (0..n_p).rev() {
        for i in 0..n_q {
            let v = re[j * n_q + i];
            let pixel = if v_max > v_min {
                (255.0 * (v - v_min) / (v_max - v_min)).round() as u8
            } else {
                128
            };
            bytes.push(pixel);
        }
    }
    Ok((bytes, v_min, v_max))
}

/// JSON sidecar for a distribution image: normalization bounds plus the
/// resonance and smoothing parameters the grid was rendered with.
pub fn sidecar_json(
    prov: &Provenance,
    lambda0: Complex64,
    sigma: f64,
    v_min: f64,
    v_max: f64,
) -> String {
    format!(
        concat!(
            "{{\n",
            "  \"version\": \"{}\",\n",
            "  \"config_sha256\": \"{}\",\n",
            "  \"n_max\": {},\n",
            "  \"lambda0_re\": {},\n",
            "  \"lambda0_im\": {},\n",
            "  \"sigma\": {},\n",
            "  \"v_min\": {},\n",
            "  \"v_max\": {}\n",
            "}}\n"
        ),
        prov.version,
        prov.config_hash,
        prov.n_max,
        f17(lambda0.re),
        f17(lambda0.im),
        f17(sigma),
        f17(v_min),
        f17(v_max),
    )
}

/// Writes bytes to a file, wrapping failures with the path.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            version: "0.0.0",
            config_hash: "ab".repeat(32),
            n_max: 8,
        }
    }

    #[test]
    fn seventeen_digit_floats_reparse_exactly() {
        for x in [
            0.1,
            -0.4103384,
            4.0,
            6.0 - 3.0f64.sqrt(),
            1.0e-300,
            -0.0,
            std::f64::consts::PI,
        ] {
            let back: f64 = f17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} reprinted as {}", f17(x));
        }
        assert_eq!(f17(4.0), "4.0000000000000000e0");
    }

    #[test]
    fn csv_body_places_provenance_before_the_header() {
        let body = csv_body(&prov(), ORBITS_HEADER, &["0,fundamental,1,a,b,1,c".into()]);
        let mut lines = body.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# tridisc 0.0.0 config_sha256=abab"));
        assert_eq!(lines.next().unwrap(), ORBITS_HEADER);
        assert_eq!(lines.next().unwrap(), "0,fundamental,1,a,b,1,c");
        assert!(lines.next().is_none());
        assert!(body.ends_with('\n'));
    }

    #[test]
    fn pgm_flips_rows_and_normalizes_the_range() {
        // 3 wide, 2 tall; p-ascending row-major input. The p = +1 row is
        // the second input row and must come out first.
        let re = [0.0, 0.5, 1.0, 1.0, 1.0, 1.0];
        let (bytes, v_min, v_max) = pgm_bytes(3, 2, &re, &prov()).unwrap();
        assert_eq!(v_min, 0.0);
        assert_eq!(v_max, 1.0);
        let text_end = bytes.len() - 6;
        let header = std::str::from_utf8(&bytes[..text_end]).unwrap();
        assert!(header.starts_with("P5\n# tridisc 0.0.0"));
        assert!(header.ends_with("3 2\n255\n"));
        assert_eq!(&bytes[text_end..], &[255, 255, 255, 0, 128, 255]);
    }

    #[test]
    fn constant_pgm_renders_mid_gray() {
        let re = [2.5; 4];
        let (bytes, v_min, v_max) = pgm_bytes(2, 2, &re, &prov()).unwrap();
        assert_eq!(v_min, v_max);
        assert_eq!(&bytes[bytes.len() - 4..], &[128, 128, 128, 128]);
    }

    #[test]
    fn malformed_pgm_requests_are_rejected() {
        assert!(pgm_bytes(2, 2, &[1.0; 3], &prov()).is_err());
        assert!(pgm_bytes(0, 2, &[], &prov()).is_err());
        assert!(pgm_bytes(1, 2, &[1.0, f64::NAN], &prov()).is_err());
    }

    #[test]
    fn sidecar_records_normalization_and_resonance() {
        let text = sidecar_json(&prov(), Complex64::new(-0.41, 0.0), 0.1, -2.0, 3.0);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["version"], "0.0.0");
        assert_eq!(parsed["n_max"], 8);
        assert_eq!(parsed["lambda0_re"].as_f64().unwrap(), -0.41);
        assert_eq!(parsed["sigma"].as_f64().unwrap(), 0.1);
        assert_eq!(parsed["v_min"].as_f64().unwrap(), -2.0);
        assert_eq!(parsed["v_max"].as_f64().unwrap(), 3.0);
    }
}
