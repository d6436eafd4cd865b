//! Curves, forms and points used across the integration tests.
#![allow(dead_code)]

pub mod dense;
pub mod oracle;
pub mod quad;

use rankbound::cubic::BinaryCubicForm;
use rankbound::elliptic::EllipticCurve;
use rug::Integer;

fn int(s: &str) -> Integer {
    s.parse().unwrap()
}

/// Record-rank curves, indexed by their rank.
pub fn curve(r: u32) -> EllipticCurve {
    let a: [&str; 5] = match r {
        28 => ["1", "-1", "1", "-20067762415575526585033208209338542750930230312178956502", "34481611795030556467032985690390720374855944359319180361266008296291939448732243429"],
        27 => ["1", "0", "0", "-55671146865244401916117773020296610079754015500970", "161981895322788558220906653027519611838007321625214218991719656790551905956"],
        20 => ["1", "0", "0", "-431092980766333677958362095891166", "5156283555366643659035652799871176909391533088196"],
        21 => ["1", "1", "1", "-215843772422443922015169952702159835", "-19474361277787151947255961435459054151501792241320535"],
        22 => ["1", "0", "1", "-940299517776391362903023121165864", "10707363070719743033425295515449274534651125011362"],
        23 => ["1", "0", "1", "-19252966408674012828065964616418441723", "32685500727716376257923347071452044295907443056345614006"],
        24 => ["1", "0", "1", "-120039822036992245303534619191166796374", "504224992484910670010801799168082726759443756222911415116"],
        _ => panic!("no curve of rank {r}"),
    };
    EllipticCurve::new(a.map(int)).unwrap()
}

/// Reduced maximal forms for the cubic fields attached to the curves above.
pub fn field_form(r: u32) -> BinaryCubicForm {
    let c: [&str; 4] = match r {
        20 => ["13370149617006967", "36323790822192190", "97698281640159313", "-102297590541619200"],
        21 => ["274654350297600", "-1624392373464273559", "-9371598016369119418702", "6162113868013558026402675"],
        22 => ["6142990220640", "204976117420509373", "-169253519238896688671", "-628110960931737938720390"],
        23 => ["59865403640328000", "30357716218004835541", "-14206611767334834785", "3031944233345318784207"],
        24 => ["70256883874320", "75608696284455934477", "-214624301781108927172690", "-25666999271392112689637803778"],
        27 => ["15560036076469248", "51468441407469319836143473", "-497312227802505407769400165687028", "556884612253557846953628131195272740623601"],
        28 => ["64023127168000", "10309553525987840512490787747", "-3858878002265332645698861066081585182608", "-69043295714402138353376748510210837676894689434302674"],
        _ => panic!("no form for rank {r}"),
    };
    BinaryCubicForm::new(c.map(int))
}

/// Independent points on the rank 27 curve.
pub const E27_POINTS: [(&str, &str); 27] = [
    ("3767967516008165080365044", "2389736302094908158004099904947501190"),
    ("6870254134405565034404108", "10187524517965617942800545361683736678"),
    ("3887185284020449623939380", "2077020998301366905747533719381033926"),
    ("4704247833799635063001076", "2048360739972031724784820678863578246"),
    ("4126561570009022393013236", "1587663907962563318996362180056025478"),
    ("4589477829219012602846900", "1774818405716699582839388275297252934"),
    ("1744288391661626065189796", "8377495495389391047035879698795823126"),
    ("375965292932773063399988", "11878746522289663117790823052090948358"),
    ("-4430058725939313297140384", "17935065674772418581237173320631279206"),
    ("46029381695079838296565796", "308418721198583803941973238472690797126"),
    ("5015368619774521542769364", "2987769291318668561101046595511063430"),
    ("55141979583089031946559900", "405905110011451276640435700460385551166"),
    ("2703830808220294466353748", "5587793124284970779400186615144247334"),
    ("3412724629872318338319668", "3426156011058008602456511184805561094"),
    ("272723117214107051072886140", "4502171870151657762741942725666306991014"),
    ("4732850534022088572670964", "2124602225002897987491873188898646406"),
    ("19225480790209113087907256", "78725996092378368618479740248297817478"),
    ("5213267756598937117846508", "3666105463387143768198032469471386414"),
    ("-4503215618194252049902522", "17926532987110694852440283715314002874"),
    ("10358928712485769814651816", "26398450763063898266637186797421380678"),
    ("6560446866541184312028656", "8894515448962144734398280820434671978"),
    ("4667249764662401626929236", "1954092716090144351072720616414325286"),
    ("3131745787384349113625300", "4283649283716227803355987840842617734"),
    ("243907731994687263474127628", "3807478665185691587984635270031859346574"),
    ("110171466072672245507182388", "1153803508275547153736593941741941166854"),
    ("2631452133741740392491152", "5805818938673165314161211507146370634"),
    ("2398961346477899287733092916", "117498623151243646059583140149253976390406"),
];
