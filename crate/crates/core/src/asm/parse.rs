use std::collections::BTreeMap;

use super::{is_label_name, parse_int, ParseError, Program, Statement, StatementKind, BODY_END, BODY_START};

/// Parses one source line into one statement, or two when a label and an
/// instruction share the line.
pub fn parse_statement(line: &str) -> Result<Vec<Statement>, String> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let trimmed = line.trim();
    if trimmed.eq_ignore_ascii_case(BODY_START) || trimmed.eq_ignore_ascii_case(BODY_END) {
        return Ok(vec![plain(
            StatementKind::Directive,
            trimmed.to_ascii_uppercase(),
            vec![],
            line,
        )]);
    }

    let code = match line.find(';') {
        Some(i) => &line[..i],
        None => line,
    };
    if code.trim().is_empty() {
        return Ok(vec![plain(StatementKind::CommentOnly, String::new(), vec![], line)]);
    }

    let code_trimmed = code.trim();
    if code_trimmed.starts_with('.') {
        let (head, rest) = split_head(code_trimmed);
        let operands = split_operands(rest).ok_or("empty operand in directive")?;
        return Ok(vec![plain(
            StatementKind::Directive,
            head.to_ascii_uppercase(),
            operands,
            line,
        )]);
    }

    if let Some(colon) = code.find(':') {
        let name = code[..colon].trim();
        if !is_label_name(name) {
            return Err(format!("invalid label name `{name}`"));
        }
        let after_colon = &line[colon + 1..];
        let rest_code = &code[colon + 1..];
        if rest_code.trim().is_empty() {
            return Ok(vec![plain(
                StatementKind::LabelDefinition,
                String::new(),
                vec![name.to_string()],
                line,
            )]);
        }
        let label = plain(
            StatementKind::LabelDefinition,
            String::new(),
            vec![name.to_string()],
            &line[..=colon],
        );
        let instr_line = format!("    {}", after_colon.trim_start());
        let instr = parse_instruction(rest_code.trim(), &instr_line)?;
        return Ok(vec![label, instr]);
    }

    Ok(vec![parse_instruction(code_trimmed, line)?])
}

fn plain(kind: StatementKind, mnemonic: String, operands: Vec<String>, raw: &str) -> Statement {
    Statement::new(kind, mnemonic, operands, raw.to_string())
}

fn split_head(code: &str) -> (&str, &str) {
    match code.find(char::is_whitespace) {
        Some(i) => (&code[..i], code[i..].trim()),
        None => (code, ""),
    }
}

fn split_operands(rest: &str) -> Option<Vec<String>> {
    if rest.is_empty() {
        return Some(vec![]);
    }
    let ops: Vec<String> = rest.split(',').map(|o| o.trim().to_string()).collect();
    if ops.iter().any(String::is_empty) {
        None
    } else {
        Some(ops)
    }
}

fn parse_instruction(code: &str, raw: &str) -> Result<Statement, String> {
    let (head, rest) = split_head(code);
    if !head.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Err(format!("invalid mnemonic `{head}`"));
    }
    let operands = split_operands(rest).ok_or_else(|| format!("empty operand in `{code}`"))?;
    for op in &operands {
        if parse_int(op).is_none() && !is_label_name(op) {
            return Err(format!("invalid operand `{op}`"));
        }
    }
    Ok(plain(
        StatementKind::Instruction,
        head.to_ascii_uppercase(),
        operands,
        raw,
    ))
}

struct Parsed {
    program: Program,
    /// 1-based source line of each body statement.
    body_lines: Vec<usize>,
}

fn parse_sections(text: &str) -> Result<Parsed, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let is_marker = |l: &str, m: &str| l.trim().eq_ignore_ascii_case(m);
    let start = lines
        .iter()
        .position(|l| is_marker(l, BODY_START))
        .ok_or(ParseError::MissingBodyMarker(BODY_START))?;
    let end = lines[start + 1..]
        .iter()
        .position(|l| is_marker(l, BODY_END))
        .map(|i| i + start + 1)
        .ok_or(ParseError::MissingBodyMarker(BODY_END))?;

    // Prologue and epilogue are kept verbatim; lines the dialect does not
    // understand are carried as opaque directives.
    let lenient = |l: &str| -> Vec<Statement> {
        parse_statement(l).unwrap_or_else(|_| {
            vec![plain(StatementKind::Directive, String::new(), vec![], l)]
        })
    };
    let prologue: Vec<Statement> = lines[..=start].iter().flat_map(|l| lenient(l)).collect();
    let epilogue: Vec<Statement> = lines[end..].iter().flat_map(|l| lenient(l)).collect();

    let mut body = Vec::new();
    let mut body_lines = Vec::new();
    for (offset, line) in lines[start + 1..end].iter().enumerate() {
        let line_no = start + 2 + offset;
        let stmts = parse_statement(line).map_err(|message| ParseError::Syntax {
            line: line_no,
            message,
        })?;
        for mut s in stmts {
            s.provenance = Some(body.len() as u32);
            body.push(s);
            body_lines.push(line_no);
        }
    }
    Ok(Parsed {
        program: Program::from_sections(prologue, body, epilogue),
        body_lines,
    })
}

/// Segments and parses program text without checking label integrity.
/// Useful when the caller wants label problems reported as violations.
pub fn parse_program_unchecked(text: &str) -> Result<Program, ParseError> {
    parse_sections(text).map(|p| p.program)
}

/// Parses program text. Errors carry 1-based source line numbers.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let Parsed { program, body_lines } = parse_sections(text)?;
    let mut seen = BTreeMap::new();
    for (i, s) in program.body.iter().enumerate() {
        if let Some(name) = s.label_name() {
            if seen.insert(name, i).is_some() {
                return Err(ParseError::DuplicateLabel {
                    label: name.to_string(),
                    line: body_lines[i],
                });
            }
        }
    }
    for (i, s) in program.body.iter().enumerate() {
        if let Some(target) = s.jump_target() {
            if !seen.contains_key(target) {
                return Err(ParseError::UndefinedLabel {
                    label: target.to_string(),
                    line: body_lines[i],
                });
            }
        }
    }
    Ok(program)
}
