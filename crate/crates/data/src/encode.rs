use crate::DataError;
use dfax_automata::Alphabet;

/// Token id of the leading classification marker.
pub const CLS_ID: usize = 0;
/// Token id of the trailing separator marker.
pub const SEP_ID: usize = 1;
/// First token id assigned to alphabet symbols, in canonical order.
pub const SYMBOL_OFFSET: usize = 2;

/// Model vocabulary size: the two markers plus one id per symbol.
pub fn vocab_size(alphabet: &Alphabet) -> usize {
    alphabet.len() + SYMBOL_OFFSET
}

/// Frame a string of symbol indices as model input token ids:
/// `[CLS_ID, symbols + SYMBOL_OFFSET .., SEP_ID]`.
pub fn frame_tokens(symbols: &[usize], max_symbols: usize) -> Result<Vec<usize>, DataError> {
    if symbols.len() > max_symbols {
        return Err(DataError::Overlength { len: symbols.len(), max: max_symbols });
    }
    let mut ids = Vec::with_capacity(symbols.len() + 2);
    ids.push(CLS_ID);
    ids.extend(symbols.iter().map(|&s| s + SYMBOL_OFFSET));
    ids.push(SEP_ID);
    Ok(ids)
}

/// Parse a word over `alphabet` and frame it as model input token ids.
pub fn encode_word(
    word: &str,
    alphabet: &Alphabet,
    max_symbols: usize,
) -> Result<Vec<usize>, DataError> {
    let symbols = alphabet.parse_word(word)?;
    frame_tokens(&symbols, max_symbols)
}
