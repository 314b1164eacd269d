//! Plain-text gluing tables. One line per tetrahedron:
//!
//! ```text
//! tet 0: 1(0123) bdry 1(1032) 2(2103)
//! ```
//!
//! The k-th line must be headed `tet k:` and lists four slots, one per
//! face in face order. A slot is either `bdry` or `<tet>(<perm>)`, where
//! the permutation gives the images of vertices 0..3 in the neighbor.
//! Blank lines and `#` comments are ignored.

use super::{Gluing, Perm4, TriError, Triangulation};

pub fn render_tri(t: &Triangulation) -> String {
    let mut out = String::new();
    for (k, faces) in t.gluings().iter().enumerate() {
        out.push_str(&format!("tet {k}:"));
        for g in faces {
            match g {
                None => out.push_str(" bdry"),
                Some(g) => {
                    let im = g.perm.images();
                    out.push_str(&format!(
                        " {}({}{}{}{})",
                        g.tet, im[0], im[1], im[2], im[3]
                    ));
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_tri(text: &str) -> Result<Triangulation, TriError> {
    let mut table: Vec<[Option<Gluing>; 4]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| TriError::Parse {
            line: lineno + 1,
            msg,
        };

        let rest = line
            .strip_prefix("tet ")
            .ok_or_else(|| err("expected `tet <k>: ...`".into()))?;
        let (num, slots) = rest
            .split_once(':')
            .ok_or_else(|| err("missing `:` after tet index".into()))?;
        let k: usize = num
            .trim()
            .parse()
            .map_err(|_| err(format!("bad tet index `{}`", num.trim())))?;
        if k != table.len() {
            return Err(err(format!(
                "tet index {k} out of order, expected {}",
                table.len()
            )));
        }

        let tokens: Vec<&str> = slots.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(err(format!("expected 4 face slots, got {}", tokens.len())));
        }
        let mut faces = [None; 4];
        for (f, tok) in tokens.iter().enumerate() {
            if *tok == "bdry" {
                continue;
            }
            let open = tok
                .find('(')
                .ok_or_else(|| err(format!("bad slot `{tok}`")))?;
            if !tok.ends_with(')') {
                return Err(err(format!("bad slot `{tok}`")));
            }
            let tet: usize = tok[..open]
                .parse()
                .map_err(|_| err(format!("bad neighbor index in `{tok}`")))?;
            let digits = &tok[open + 1..tok.len() - 1];
            if digits.len() != 4 {
                return Err(err(format!("permutation in `{tok}` must have 4 digits")));
            }
            let mut images = [0u8; 4];
            for (i, ch) in digits.chars().enumerate() {
                let d = ch
                    .to_digit(10)
                    .filter(|&d| d < 4)
                    .ok_or_else(|| err(format!("bad permutation digit `{ch}`")))?;
                images[i] = d as u8;
            }
            let mut sorted = images;
            sorted.sort_unstable();
            if sorted != [0, 1, 2, 3] {
                return Err(err(format!("`{digits}` is not a permutation of 0123")));
            }
            let perm = Perm4::from_images(images);
            faces[f] = Some(Gluing {
                tet,
                face: perm.apply(f as u8),
                perm,
            });
        }
        table.push(faces);
    }
    Triangulation::new(table)
}

#[cfg(test)]
mod tests {
    use super::super::{one_tet_solid_torus, two_tet_sphere};
    use super::*;

    #[test]
    fn round_trip() {
        for t in [two_tet_sphere(), one_tet_solid_torus()] {
            let text = render_tri(&t);
            let mut back = parse_tri(&text).unwrap();
            back.validate_and_orient().unwrap();
            assert_eq!(back.gluings(), t.gluings());
        }
    }

    #[test]
    fn sphere_text_form() {
        let text = render_tri(&two_tet_sphere());
        assert_eq!(
            text,
            "tet 0: 1(0123) 1(0123) 1(0123) 1(0123)\n\
             tet 1: 0(0123) 0(0123) 0(0123) 0(0123)\n"
        );
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# a ball\n\ntet 0: bdry bdry bdry bdry # free\n";
        let t = parse_tri(text).unwrap();
        assert_eq!(t.tet_count(), 1);
        assert_eq!(t.boundary_face_count(), 4);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let r = parse_tri("tet 0: bdry bdry bdry");
        match r {
            Err(TriError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let r = parse_tri("tet 1: bdry bdry bdry bdry");
        assert!(matches!(r, Err(TriError::Parse { .. })));
        let r = parse_tri("tet 0: 0(0113) bdry bdry bdry");
        assert!(matches!(r, Err(TriError::Parse { .. })));
        // Structural problems surface from the table check.
        let r = parse_tri("tet 0: 1(0123) bdry bdry bdry\ntet 1: bdry bdry bdry bdry");
        assert!(matches!(r, Err(TriError::BadGluing(_))));
    }
}
